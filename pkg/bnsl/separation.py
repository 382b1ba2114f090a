"""
BNSL - Separation
Cutting-plane finders: complete cluster separation by a small sub-IP search,
brute-force cluster scan, 4B facet scan and Gomory fractional cuts.
"""

import heapq
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .config import GOMORY_MIN_FRAC, MAX_CLUSTER_CUTS, MAX_CONVEX4B_CUTS, MAX_GOMORY_CUTS, VIOL_TOL
from .ip_model import (
    IpModel,
    LinearInequality,
    RowTag,
    Sense,
    cluster_inequality,
    convex4b_inequality,
)
from .lp_simplex import ColumnKind, LpSolution
from .scoring import ScoreTable

logger = logging.getLogger(__name__)

Point = Union[LpSolution, np.ndarray]


@dataclass
class Cut:
    """A valid inequality together with how far the current point breaks it."""
    inequality: LinearInequality
    violation: float
    source: RowTag
    subip_objective: Optional[float] = None

    @property
    def cluster(self) -> FrozenSet[int]:
        return frozenset(self.inequality.scope)

    def sort_key(self) -> Tuple[float, Tuple[int, ...]]:
        return (-self.violation, self.inequality.scope)


def _values(xstar: Point) -> np.ndarray:
    if isinstance(xstar, LpSolution):
        return xstar.values
    return np.asarray(xstar, dtype=float)


def _bit_count(mask: int) -> int:
    return bin(mask).count("1")


class ClusterSubIp:
    """Depth-first search over cluster membership maximizing Σ J·x* − |C|.

    J(W→v) is forced to 1 exactly when v ∈ C and W meets C, so only the
    membership indicators are branched on. Solutions with objective above -1
    are violated cluster constraints; the best `limit` of them are kept.
    """

    def __init__(self, x: np.ndarray, table: ScoreTable, sparse: bool = True,
                 limit: int = MAX_CLUSTER_CUTS, skip: Iterable[FrozenSet[int]] = ()):
        self.limit = limit
        self.skip = set(skip)
        self.entries: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        mass: Dict[int, float] = {}
        for v in range(table.p):
            masks, weights = [], []
            for i, cand in zip(table.node_ids(v), table.candidates[v]):
                if not cand.parents:
                    continue
                if sparse and x[i] <= 0.0:
                    continue
                masks.append(sum(1 << u for u in cand.parents))
                weights.append(max(float(x[i]), 0.0))
            if masks:
                self.entries[v] = (np.array(masks, dtype=np.int64), np.array(weights))
                mass[v] = float(sum(weights))
        self.order = sorted(self.entries, key=lambda v: (-mass[v], v))
        self.n_jvars = sum(len(m) for m, _ in self.entries.values())
        self.base_floor = -1.0 + VIOL_TOL
        self.found: List[Tuple[float, Tuple[int, ...]]] = []
        self.visited = 0

    def _assignable(self, v: int, allowed: int) -> float:
        masks, weights = self.entries[v]
        return float(weights[(masks & allowed) != 0].sum())

    def _floor(self) -> float:
        if len(self.found) >= self.limit:
            return max(self.base_floor, self.found[0][0])
        return self.base_floor

    def _bound(self, in_nodes: List[int], undecided: List[int], allowed: int) -> float:
        bound = -float(len(in_nodes))
        for v in in_nodes:
            bound += self._assignable(v, allowed)
        for v in undecided:
            bound += max(0.0, self._assignable(v, allowed) - 1.0)
        return bound

    def _accept(self, objective: float, nodes: Tuple[int, ...]):
        if len(nodes) < 2 or objective < self.base_floor or frozenset(nodes) in self.skip:
            return
        # Min-heap on (objective, reversed-lexicographic) so the worst kept entry sits on top
        item = (objective, tuple(-u for u in nodes), nodes)
        if len(self.found) < self.limit:
            heapq.heappush(self.found, item)
        elif item[:2] > self.found[0][:2]:
            heapq.heapreplace(self.found, item)

    def _search(self, k: int, in_nodes: List[int], in_mask: int, und_mask: int):
        self.visited += 1
        undecided = self.order[k:]
        bound = self._bound(in_nodes, undecided, in_mask | und_mask)
        full = len(self.found) >= self.limit
        if bound < self.base_floor or (full and bound <= self._floor()):
            return
        if k == len(self.order):
            self._accept(bound, tuple(sorted(in_nodes)))
            return
        v = self.order[k]
        bit = 1 << v
        in_nodes.append(v)
        self._search(k + 1, in_nodes, in_mask | bit, und_mask & ~bit)
        in_nodes.pop()
        self._search(k + 1, in_nodes, in_mask, und_mask & ~bit)

    def solve(self) -> List[Tuple[Tuple[int, ...], float]]:
        """Clusters of all kept sub-IP solutions with their objective values."""
        self.found = []
        und = 0
        for v in self.order:
            und |= 1 << v
        self._search(0, [], 0, und)
        ranked = sorted(self.found, key=lambda item: (-item[0], item[2]))
        return [(nodes, objective) for objective, _, nodes in ranked]


def find_cluster_cuts(xstar: Point, table: ScoreTable, registry: Optional[Set[FrozenSet[int]]] = None,
                      sparse: bool = True, limit: int = MAX_CLUSTER_CUTS) -> List[Cut]:
    """Violated cluster constraints, best violation first; empty iff none exists."""
    x = _values(xstar)
    subip = ClusterSubIp(x, table, sparse=sparse, limit=limit, skip=registry or ())
    cuts = []
    for nodes, objective in subip.solve():
        row = cluster_inequality(nodes, table)
        violation = row.violation(x)
        if violation > VIOL_TOL:
            cuts.append(Cut(row, violation, RowTag.CLUSTER, objective))
    cuts.sort(key=Cut.sort_key)
    logger.debug("Cluster sub-IP: %d J-variables, %d search nodes, %d cuts",
                 subip.n_jvars, subip.visited, len(cuts))
    return cuts


def find_cluster_cuts_bruteforce(xstar: Point, table: ScoreTable) -> List[Cut]:
    """Evaluate the cluster constraint of every subset with at least two nodes."""
    x = _values(xstar)
    cuts = []
    for size in range(2, table.p + 1):
        for nodes in combinations(range(table.p), size):
            row = cluster_inequality(nodes, table)
            violation = row.violation(x)
            if violation > VIOL_TOL:
                cuts.append(Cut(row, violation, RowTag.CLUSTER))
    cuts.sort(key=Cut.sort_key)
    return cuts


def find_convex4b_cuts(xstar: Point, table: ScoreTable, limit: int = MAX_CONVEX4B_CUTS) -> List[Cut]:
    """Violated 4B rows over 4-sets of nodes that carry positive mass."""
    if table.p < 4:
        return []
    x = _values(xstar)
    positive: Dict[int, List[Tuple[int, float]]] = {v: [] for v in range(table.p)}
    active = set()
    for v in range(table.p):
        for i, cand in zip(table.node_ids(v), table.candidates[v]):
            if x[i] > VIOL_TOL and cand.parents:
                positive[v].append((sum(1 << u for u in cand.parents), float(x[i])))
                active.add(v)
                active.update(cand.parents)

    def mass(v: int, rule) -> float:
        return sum(w for mask, w in positive[v] if rule(mask))

    cuts = []
    for quad in combinations(sorted(active), 4):
        for v2, v3 in combinations(quad, 2):
            v1, v4 = [u for u in quad if u not in (v2, v3)]
            b1, b2, b3, b4 = (1 << v1), (1 << v2), (1 << v3), (1 << v4)
            middle, ends = b2 | b3, b1 | b4
            lhs = (mass(v1, lambda m: bool(m & b4) and bool(m & middle))
                   + mass(v4, lambda m: bool(m & b1) and bool(m & middle))
                   + mass(v2, lambda m: bool(m & b3) or (m & ends) == ends)
                   + mass(v3, lambda m: bool(m & b2) or (m & ends) == ends))
            if lhs - 2.0 > VIOL_TOL:
                row = convex4b_inequality(v1, v2, v3, v4, table)
                violation = row.violation(x)
                if violation > VIOL_TOL:
                    cuts.append(Cut(row, violation, RowTag.CONVEX4B))
    cuts.sort(key=Cut.sort_key)
    return cuts[:limit]


def _frac(value: float) -> float:
    f = value - np.floor(value)
    if f < 1e-9 or f > 1.0 - 1e-9:
        return 0.0
    return float(f)


def find_gomory_cuts(sol: LpSolution, model: IpModel, limit: int = MAX_GOMORY_CUTS) -> List[Cut]:
    """Gomory fractional cuts read off the optimal tableau of `sol`.

    The cuts are valid for every integer point of the LP that produced `sol`,
    including its fixings, so callers must keep them local to that subtree.
    """
    engine = sol.engine
    if engine is None or not sol.optimal:
        return []
    x = sol.values
    sources = []
    for j in np.flatnonzero(engine.is_basic[:engine.n]):
        f = x[j] - np.floor(x[j])
        if GOMORY_MIN_FRAC <= f <= 1.0 - GOMORY_MIN_FRAC:
            sources.append((abs(f - 0.5), int(j)))
    sources.sort()

    integral_row = [row.integral for row in engine.rows]
    cuts: List[Cut] = []
    seen = set()
    for _, j in sources:
        if len(cuts) >= limit:
            break
        tab = engine.tableau_row(j)
        cut = _gomory_from_row(tab.coeffs, tab.value, engine, integral_row)
        if cut is None:
            continue
        violation = cut.violation(x)
        if violation <= VIOL_TOL or cut.key() in seen:
            continue
        seen.add(cut.key())
        cuts.append(Cut(cut, violation, RowTag.GOMORY))
    cuts.sort(key=lambda c: -c.violation)
    return cuts


def _gomory_from_row(coeffs: np.ndarray, value: float, engine, integral_row: Sequence[bool]
                     ) -> Optional[LinearInequality]:
    f0 = _frac(value)
    if f0 < GOMORY_MIN_FRAC:
        return None
    structural = np.zeros(engine.n)
    constant = 0.0
    for k in np.flatnonzero(~engine.is_basic & (np.abs(coeffs) > 1e-9)):
        kind, ref = engine.kinds[k]
        if kind == ColumnKind.ARTIFICIAL or not engine.movable[k]:
            continue
        if kind == ColumnKind.SLACK and not integral_row[ref]:
            return None
        upper = bool(engine.at_upper[k])
        f = _frac(-coeffs[k] if upper else coeffs[k])
        if f == 0.0:
            continue
        if kind == ColumnKind.STRUCTURAL:
            if upper:
                structural[ref] -= f
                constant += f * engine.ub[k]
            else:
                structural[ref] += f
                constant -= f * engine.lb[k]
        else:
            row = engine.rows[ref]
            sign = -1.0 if row.sense == Sense.LE else 1.0
            structural[row.indices] += sign * f * row.values
            constant -= sign * f * row.rhs

    rhs = f0 - constant
    terms = {}
    for i in np.flatnonzero(structural):
        c = float(structural[i])
        if abs(c) < 1e-9:
            if c > 0:
                rhs -= c
            continue
        terms[int(i)] = c
    if not terms:
        return None
    return LinearInequality(terms, Sense.GE, float(rhs), RowTag.GOMORY)
