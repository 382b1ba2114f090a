"""
BNSL - LP Relaxation Engine
Bounded-variable primal simplex over the family variables.

Every row gets an artificial column fixed to [0, 0] and every inequality row a
slack column on [0, inf). Phase 1 drives the sum of basic bound violations to
zero from any starting basis (cold slack basis or a warm basis carried over
from an earlier solve), phase 2 maximizes the objective. The basis inverse is
kept explicitly with product-form updates and refactored periodically.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import (
    BLAND_AFTER,
    FEAS_TOL,
    INT_TOL,
    MAX_PIVOTS,
    OPT_TOL,
    PIVOT_TOL,
    REFACTOR_EVERY,
)
from .errors import LpError, NotBasicError
from .ip_model import IpModel, LinearInequality, Sense

logger = logging.getLogger(__name__)

Fixings = Mapping[int, int]
ColumnKey = Tuple[Hashable, ...]


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class ColumnKind(str, Enum):
    STRUCTURAL = "x"
    SLACK = "s"
    ARTIFICIAL = "a"


@dataclass(frozen=True)
class LpBasis:
    """Basis identity that survives row additions and removals."""
    basic: Tuple[ColumnKey, ...]
    at_upper: FrozenSet[ColumnKey]


@dataclass
class TableauRow:
    """x[column] + Σ_k coeffs[k]·x[k] over nonbasic k equals the row's right-hand side."""
    column: int
    row: int
    coeffs: np.ndarray
    value: float


class _Unbounded(Exception):
    pass


class SimplexEngine:
    """Dense bounded-variable primal simplex for one LP instance."""

    def __init__(self, objective: np.ndarray, rows: Sequence[LinearInequality],
                 lb: np.ndarray, ub: np.ndarray):
        self.n = len(objective)
        self.rows = list(rows)
        self.m = len(self.rows)
        m, n = self.m, self.n

        self.kinds: List[Tuple[ColumnKind, int]] = [(ColumnKind.STRUCTURAL, j) for j in range(n)]
        self.slack_col: Dict[int, int] = {}
        self.art_col: Dict[int, int] = {}
        for r, row in enumerate(self.rows):
            if row.sense != Sense.EQ:
                self.slack_col[r] = len(self.kinds)
                self.kinds.append((ColumnKind.SLACK, r))
        for r in range(m):
            self.art_col[r] = len(self.kinds)
            self.kinds.append((ColumnKind.ARTIFICIAL, r))
        total = len(self.kinds)

        self.A = np.zeros((m, total))
        self.b = np.zeros(m)
        for r, row in enumerate(self.rows):
            self.A[r, row.indices] = row.values
            self.b[r] = row.rhs
            if r in self.slack_col:
                self.A[r, self.slack_col[r]] = 1.0 if row.sense == Sense.LE else -1.0
            self.A[r, self.art_col[r]] = 1.0

        self.lb = np.zeros(total)
        self.ub = np.zeros(total)
        self.lb[:n] = lb
        self.ub[:n] = ub
        for col in self.slack_col.values():
            self.ub[col] = np.inf
        self.cost = np.zeros(total)
        self.cost[:n] = objective
        self.movable = (self.ub - self.lb) > PIVOT_TOL

        self.row_keys = self._row_keys()
        self.basis = np.zeros(m, dtype=np.int64)
        self.is_basic = np.zeros(total, dtype=bool)
        self.at_upper = np.zeros(total, dtype=bool)
        self.x = np.zeros(total)
        self.Binv = np.eye(m)
        self.pivots = 0

    def _row_keys(self) -> List[ColumnKey]:
        seen: Dict[Tuple, int] = {}
        keys = []
        for row in self.rows:
            base = row.key()
            count = seen.get(base, 0)
            seen[base] = count + 1
            keys.append((base, count))
        return keys

    def column_key(self, col: int) -> ColumnKey:
        kind, ref = self.kinds[col]
        if kind == ColumnKind.STRUCTURAL:
            return (kind.value, ref)
        return (kind.value, self.row_keys[ref])

    # -- basis handling -------------------------------------------------

    def _slack_basis(self, at_upper_hint: FrozenSet[ColumnKey] = frozenset()):
        self.is_basic[:] = False
        self.at_upper[:] = False
        for r in range(self.m):
            col = self.slack_col.get(r, self.art_col[r])
            self.basis[r] = col
            self.is_basic[col] = True
        for j in range(self.n):
            if self.column_key(j) in at_upper_hint and self.movable[j]:
                self.at_upper[j] = True
        self._refactor()

    def _install(self, warm: LpBasis) -> bool:
        """Try to reuse a prior basis; False when it does not fit this LP."""
        index = {self.column_key(c): c for c in range(len(self.kinds))}
        cols = []
        for key in warm.basic:
            col = index.get(key)
            if col is not None:
                cols.append(col)
        known_rows = {key[1] for key in warm.basic + tuple(warm.at_upper) if key[0] != "x"}
        covered = set(cols)
        fill = [r for r in range(self.m) if self.row_keys[r] not in known_rows]
        fill += [r for r in range(self.m) if self.row_keys[r] in known_rows]
        for r in fill:
            if len(cols) >= self.m:
                break
            col = self.slack_col.get(r, self.art_col[r])
            if col not in covered:
                cols.append(col)
                covered.add(col)
        if len(cols) != self.m or len(covered) != self.m:
            return False

        self.basis = np.array(cols, dtype=np.int64)
        self.is_basic[:] = False
        self.is_basic[self.basis] = True
        self.at_upper[:] = False
        for key in warm.at_upper:
            col = index.get(key)
            if col is not None and not self.is_basic[col] and np.isfinite(self.ub[col]):
                self.at_upper[col] = True
        try:
            self._refactor()
        except LpError:
            return False
        check = self.A[:, self.basis] @ self.Binv
        return bool(np.allclose(check, np.eye(self.m), atol=1e-8))

    def _refactor(self):
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
        else:
            try:
                self.Binv = np.linalg.inv(self.A[:, self.basis])
            except np.linalg.LinAlgError as exc:
                raise LpError("singular basis after refactorization") from exc
            if not np.all(np.isfinite(self.Binv)):
                raise LpError("singular basis after refactorization")
        nonbasic = ~self.is_basic
        self.x[nonbasic] = np.where(self.at_upper[nonbasic], self.ub[nonbasic], self.lb[nonbasic])
        self.x[self.basis] = 0.0
        rhs = self.b - self.A @ self.x
        if self.m:
            self.x[self.basis] = self.Binv @ rhs

    def basis_record(self) -> LpBasis:
        basic = tuple(self.column_key(c) for c in self.basis)
        upper = frozenset(self.column_key(c) for c in np.flatnonzero(self.at_upper & ~self.is_basic))
        return LpBasis(basic, upper)

    # -- iterations -----------------------------------------------------

    def _infeasibility(self) -> Tuple[np.ndarray, np.ndarray]:
        xb = self.x[self.basis]
        below = xb < self.lb[self.basis] - FEAS_TOL
        above = xb > self.ub[self.basis] + FEAS_TOL
        return below, above

    def _run(self, phase: int) -> bool:
        """Iterate one phase to optimality. Phase 1 returns False on infeasibility."""
        degenerate = 0
        bland = False
        since_refactor = 0
        while True:
            if self.pivots > MAX_PIVOTS:
                raise LpError(f"simplex exceeded {MAX_PIVOTS} pivots")
            if phase == 1:
                below, above = self._infeasibility()
                if not below.any() and not above.any():
                    return True
                c_b = below.astype(float) - above.astype(float)
                y = c_b @ self.Binv
                d = -(y @ self.A)
            else:
                below = above = np.zeros(self.m, dtype=bool)
                y = self.cost[self.basis] @ self.Binv if self.m else np.zeros(0)
                d = self.cost - y @ self.A
            d[self.is_basic] = 0.0

            free = self.movable & ~self.is_basic
            inc = free & ~self.at_upper & (d > OPT_TOL)
            dec = free & self.at_upper & (d < -OPT_TOL)
            eligible = inc | dec
            if not eligible.any():
                return phase == 2

            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if inc[j] else -1.0
            alpha = self.Binv @ self.A[:, j]
            delta = -direction * alpha

            r, step, to_upper = self._ratio_test(delta, alpha, below, above, bland)
            flip = self.ub[j] - self.lb[j]
            if r < 0 and not np.isfinite(flip):
                raise _Unbounded()

            if r < 0 or flip <= step:
                self.x[self.basis] += flip * delta
                self.x[j] += direction * flip
                self.at_upper[j] = not self.at_upper[j]
                degenerate = 0
                continue

            self.x[self.basis] += step * delta
            self.x[j] += direction * step
            leaving = int(self.basis[r])
            self.x[leaving] = self.ub[leaving] if to_upper else self.lb[leaving]
            self.at_upper[leaving] = to_upper
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.at_upper[j] = False
            self.basis[r] = j

            pivot_row = self.Binv[r] / alpha[r]
            self.Binv -= np.outer(alpha, pivot_row)
            self.Binv[r] = pivot_row
            self.pivots += 1
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0

            if step <= 1e-12:
                degenerate += 1
                if degenerate >= BLAND_AFTER and not bland:
                    logger.debug("Switching to Bland's rule after %d degenerate pivots", degenerate)
                    bland = True
            else:
                degenerate = 0

    def _ratio_test(self, delta: np.ndarray, alpha: np.ndarray, below: np.ndarray,
                    above: np.ndarray, bland: bool) -> Tuple[int, float, bool]:
        if self.m == 0:
            return -1, np.inf, False
        xb = self.x[self.basis]
        lbb = self.lb[self.basis]
        ubb = self.ub[self.basis]
        big = np.abs(delta) > PIVOT_TOL
        ratios = np.full(self.m, np.inf)
        to_upper = np.zeros(self.m, dtype=bool)

        falling = big & (delta < 0) & ~below
        target = np.where(above, ubb, lbb)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[falling] = (xb[falling] - target[falling]) / -delta[falling]
        to_upper[falling] = above[falling]

        rising = big & (delta > 0) & ~above
        target = np.where(below, lbb, ubb)
        rising &= np.isfinite(target)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[rising] = (target[rising] - xb[rising]) / delta[rising]
        to_upper[rising] = ~below[rising]

        ratios = np.maximum(ratios, 0.0)
        best = ratios.min()
        if not np.isfinite(best):
            return -1, np.inf, False
        ties = np.flatnonzero(ratios <= best + 1e-12)
        if bland:
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
        return r, float(best), bool(to_upper[r])

    def _dual_feasible(self) -> bool:
        y = self.cost[self.basis] @ self.Binv if self.m else np.zeros(0)
        d = self.cost - y @ self.A
        free = self.movable & ~self.is_basic
        return not np.any(free & ((~self.at_upper & (d > OPT_TOL)) | (self.at_upper & (d < -OPT_TOL))))

    def solve(self, warm: Optional[LpBasis] = None) -> LpStatus:
        if warm is None or not self._install(warm):
            self._slack_basis(warm.at_upper if warm is not None else frozenset())
        try:
            for _ in range(3):
                if not self._run(1):
                    return LpStatus.INFEASIBLE
                self._run(2)
                self._refactor()
                below, above = self._infeasibility()
                if not below.any() and not above.any() and self._dual_feasible():
                    return LpStatus.OPTIMAL
        except _Unbounded:
            return LpStatus.UNBOUNDED
        raise LpError("simplex failed to settle after refactorization")

    def tableau_row(self, column: int) -> TableauRow:
        hits = np.flatnonzero(self.basis == column)
        if hits.size == 0:
            raise NotBasicError(f"column {column} is not basic")
        r = int(hits[0])
        return TableauRow(column=column, row=r, coeffs=self.Binv[r] @ self.A, value=float(self.x[column]))


@dataclass
class LpSolution:
    """Relaxation optimum over the family variables."""
    status: LpStatus
    values: np.ndarray
    objective: float
    basis: Optional[LpBasis] = None
    pivots: int = 0
    engine: Optional[SimplexEngine] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL

    def fractional_ids(self, tol: float = INT_TOL) -> np.ndarray:
        return np.flatnonzero(np.abs(self.values - np.round(self.values)) > tol)

    def is_integral(self, tol: float = INT_TOL) -> bool:
        return self.fractional_ids(tol).size == 0


def solve_lp(model: IpModel, extra_rows: Sequence[LinearInequality] = (),
             fix: Optional[Fixings] = None, warm: Optional[LpBasis] = None) -> LpSolution:
    """Maximize the model objective over its rows plus extra rows, bounds and fixings."""
    n = model.n
    lb = np.zeros(n)
    ub = np.ones(n)
    for var, value in (fix or {}).items():
        lb[var] = ub[var] = float(value)

    engine = SimplexEngine(model.objective, list(model.rows) + list(extra_rows), lb, ub)
    status = engine.solve(warm)
    if status != LpStatus.OPTIMAL:
        logger.debug("LP %s after %d pivots", status.value, engine.pivots)
        return LpSolution(status, np.zeros(n), -np.inf, None, engine.pivots, engine)

    values = engine.x[:n].copy()
    for row in engine.rows:
        if row.violation(values) > FEAS_TOL:
            raise LpError(f"optimal point breaks a {row.tag.value} row by {row.violation(values):.2e}")
    values = np.clip(values, lb, ub)
    snapped = np.round(values)
    close = np.abs(values - snapped) <= 1e-9
    values[close] = snapped[close]
    objective = float(model.objective @ values)
    return LpSolution(status, values, objective, engine.basis_record(), engine.pivots, engine)


def tableau_row(sol: LpSolution, basic_var: int) -> TableauRow:
    """Tableau row of a basic family variable in an optimal solution."""
    if sol.engine is None or not sol.optimal:
        raise NotBasicError("tableau rows need an optimal solution")
    if basic_var < 0 or basic_var >= sol.engine.n:
        raise NotBasicError(f"{basic_var} is not a family variable")
    return sol.engine.tableau_row(basic_var)
