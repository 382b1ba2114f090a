"""
BNSL - Integer Program Model
Family-variable IP: objective, convexity rows, and constructors for every valid
inequality class the solver uses (cluster, knapsack, set packing, 4B, rank-2,
exclusion, edge presence), plus the characteristic imset mapping.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import FEAS_TOL
from .errors import InfeasibleConstraintError
from .formats.constraints import EdgeConstraint
from .network import Network
from .scoring import ScoreTable

logger = logging.getLogger(__name__)


class Sense(str, Enum):
    GE = ">="
    LE = "<="
    EQ = "="


class RowTag(str, Enum):
    CONVEXITY = "convexity"
    CLUSTER = "cluster"
    PACKING = "packing"
    CONVEX4B = "convex4B"
    CHVATAL2 = "chvatal2"
    GOMORY = "gomory"
    EXCLUSION = "exclusion"
    EDGE = "edge"


@dataclass(frozen=True)
class LinearInequality:
    """Sparse row over family variables: Σ coeffs[i]·x[i] (sense) rhs."""
    coeffs: Mapping[int, float]
    sense: Sense
    rhs: float
    tag: RowTag
    scope: Tuple[int, ...] = ()  # nodes the row was instantiated for
    _idx: np.ndarray = field(init=False, repr=False, compare=False)
    _val: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.rhs):
            raise ValueError("row right-hand side must be finite")
        items = sorted((int(i), float(c)) for i, c in self.coeffs.items() if c != 0.0)
        object.__setattr__(self, "coeffs", dict(items))
        object.__setattr__(self, "_idx", np.array([i for i, _ in items], dtype=np.int64))
        object.__setattr__(self, "_val", np.array([c for _, c in items], dtype=float))

    @property
    def indices(self) -> np.ndarray:
        return self._idx

    @property
    def values(self) -> np.ndarray:
        return self._val

    def lhs(self, x: np.ndarray) -> float:
        if self._idx.size == 0:
            return 0.0
        return float(np.dot(np.asarray(x, dtype=float)[self._idx], self._val))

    def violation(self, x: np.ndarray) -> float:
        """Amount by which x breaks the row; negative or zero when satisfied."""
        lhs = self.lhs(x)
        if self.sense == Sense.GE:
            return self.rhs - lhs
        if self.sense == Sense.LE:
            return lhs - self.rhs
        return abs(lhs - self.rhs)

    def is_satisfied(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return self.violation(x) <= tol

    @property
    def integral(self) -> bool:
        """True when every coefficient and the right-hand side are integers."""
        vals = np.append(self._val, self.rhs)
        return bool(np.all(np.abs(vals - np.round(vals)) <= 1e-9))

    def key(self) -> Tuple:
        """Identity of the row independent of its tag."""
        return (self.sense.value, round(self.rhs, 12),
                tuple((i, round(c, 12)) for i, c in self.coeffs.items()))

    def __len__(self):
        return len(self.coeffs)


@dataclass
class IpModel:
    """Objective and rows over the family variables of one score table."""
    table: ScoreTable
    objective: np.ndarray
    rows: List[LinearInequality]
    options: Dict[str, bool] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.table.n

    @property
    def p(self) -> int:
        return self.table.p

    def rows_of(self, tag: RowTag) -> List[LinearInequality]:
        return [r for r in self.rows if r.tag == tag]

    def extended(self, extra: Iterable[LinearInequality]) -> "IpModel":
        return IpModel(self.table, self.objective, list(self.rows) + list(extra), dict(self.options))

    def is_feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        return all(r.is_satisfied(x, tol) for r in self.rows)

    def summary(self) -> Dict[str, int]:
        counts: Dict[str, int] = defaultdict(int)
        for r in self.rows:
            counts[r.tag.value] += 1
        return dict(counts, variables=self.n)


def _ids_where(table: ScoreTable, v: int, predicate) -> List[int]:
    return [i for i, cand in zip(table.node_ids(v), table.candidates[v]) if predicate(cand.parents)]


def convexity_row(v: int, table: ScoreTable) -> LinearInequality:
    return LinearInequality({i: 1.0 for i in table.node_ids(v)}, Sense.EQ, 1.0,
                            RowTag.CONVEXITY, (v,))


def cluster_inequality(cluster: Iterable[int], table: ScoreTable) -> LinearInequality:
    """At least one member of the cluster takes all its parents from outside it."""
    cluster = frozenset(cluster)
    if len(cluster) < 2:
        raise ValueError("cluster needs at least two nodes")
    coeffs = {}
    for v in sorted(cluster):
        for i in _ids_where(table, v, lambda w: not (w & cluster)):
            coeffs[i] = 1.0
    return LinearInequality(coeffs, Sense.GE, 1.0, RowTag.CLUSTER, tuple(sorted(cluster)))


def knapsack_form(cluster: Iterable[int], table: ScoreTable) -> LinearInequality:
    """Cluster constraint restated as: at most |C|-1 members have a parent inside C."""
    cluster = frozenset(cluster)
    if len(cluster) < 2:
        raise ValueError("cluster needs at least two nodes")
    coeffs = {}
    for v in sorted(cluster):
        for i in _ids_where(table, v, lambda w: bool(w & cluster)):
            coeffs[i] = 1.0
    return LinearInequality(coeffs, Sense.LE, float(len(cluster) - 1), RowTag.CLUSTER,
                            tuple(sorted(cluster)))


def set_packing_inequality(cluster: Iterable[int], table: ScoreTable) -> LinearInequality:
    """At most one member of C may have all of the other members as parents."""
    cluster = frozenset(cluster)
    if len(cluster) < 2:
        raise ValueError("cluster needs at least two nodes")
    coeffs = {}
    for v in sorted(cluster):
        rest = cluster - {v}
        for i in _ids_where(table, v, lambda w: rest <= w):
            coeffs[i] = 1.0
    return LinearInequality(coeffs, Sense.LE, 1.0, RowTag.PACKING, tuple(sorted(cluster)))


def convex4b_inequality(v1: int, v2: int, v3: int, v4: int, table: ScoreTable) -> LinearInequality:
    """4B facet with end nodes v1, v4 and middle pair {v2, v3}; right-hand side 2."""
    if len({v1, v2, v3, v4}) != 4:
        raise ValueError("4B inequality needs four distinct nodes")
    middle = frozenset((v2, v3))
    ends = frozenset((v1, v4))
    rules = (
        (v1, lambda w: v4 in w and bool(w & middle)),
        (v2, lambda w: v3 in w or ends <= w),
        (v3, lambda w: v2 in w or ends <= w),
        (v4, lambda w: v1 in w and bool(w & middle)),
    )
    coeffs = {}
    for v, rule in rules:
        for i in _ids_where(table, v, rule):
            coeffs[i] = 1.0
    return LinearInequality(coeffs, Sense.LE, 2.0, RowTag.CONVEX4B, (v1, v2, v3, v4))


def chvatal2_inequality(a: int, others: Iterable[int], table: ScoreTable) -> LinearInequality:
    """Rank-2 combination of the pair clusters {a,b}, {a,c}, {a,d}."""
    others = frozenset(others)
    if len(others) != 3 or a in others:
        raise ValueError("rank-2 inequality needs a node and three other distinct nodes")
    coeffs: Dict[int, float] = {}
    for i, cand in zip(table.node_ids(a), table.candidates[a]):
        hit = len(cand.parents & others)
        if hit == 0:
            coeffs[i] = 2.0
        elif hit < 3:
            coeffs[i] = 1.0
    for u in sorted(others):
        for i in _ids_where(table, u, lambda w: a not in w):
            coeffs[i] = 1.0
    return LinearInequality(coeffs, Sense.GE, 2.0, RowTag.CHVATAL2, (a,) + tuple(sorted(others)))


def exclusion_constraint(net: Network, table: ScoreTable) -> LinearInequality:
    """Rule out exactly this family assignment."""
    coeffs = {i: 1.0 for i in net.family_ids(table)}
    return LinearInequality(coeffs, Sense.LE, float(net.p - 1), RowTag.EXCLUSION)


def edge_constraint(u: int, v: int, present: bool,
                    table: ScoreTable) -> Tuple[Optional[LinearInequality], ScoreTable]:
    """Presence gives an equality row; absence deletes the candidates of v containing u."""
    if u == v:
        raise ValueError("edge endpoints must differ")
    if present:
        coeffs = {i: 1.0 for i in _ids_where(table, v, lambda w: u in w)}
        if not coeffs:
            raise InfeasibleConstraintError(
                f"no candidate parent set of {table.names[v]} contains {table.names[u]}")
        return LinearInequality(coeffs, Sense.EQ, 1.0, RowTag.EDGE, (u, v)), table
    doomed = _ids_where(table, v, lambda w: u in w)
    if len(doomed) == len(table.candidates[v]):
        raise InfeasibleConstraintError(
            f"forbidding {table.names[u]} -> {table.names[v]} leaves {table.names[v]} without candidates")
    return None, table.without(doomed)


def apply_edge_constraints(table: ScoreTable, constraints: Sequence[EdgeConstraint]
                           ) -> Tuple[ScoreTable, List[LinearInequality]]:
    """Apply all absences first, then build presence rows on the reduced table."""
    required = {(c.parent, c.child) for c in constraints if c.required}
    forbidden = {(c.parent, c.child) for c in constraints if not c.required}
    clash = required & forbidden
    if clash:
        u, v = sorted(clash)[0]
        raise InfeasibleConstraintError(
            f"edge {table.names[u]} -> {table.names[v]} is both required and forbidden")
    for u, v in sorted(required):
        if (v, u) in required:
            raise InfeasibleConstraintError(
                f"edges {table.names[u]} -> {table.names[v]} and back are both required")
    for u, v in sorted(forbidden):
        _, table = edge_constraint(u, v, False, table)
    rows = []
    for u, v in sorted(required):
        row, _ = edge_constraint(u, v, True, table)
        rows.append(row)
    return table, rows


def packing_rows(table: ScoreTable, max_size: int = 4) -> List[LinearInequality]:
    """Every set-packing row for 2 ≤ |C| ≤ max_size with at least two terms."""
    members: Dict[FrozenSet[int], List[int]] = defaultdict(list)
    for i, fam in enumerate(table.families):
        parents = fam.sorted_parents
        for size in range(1, min(len(parents), max_size - 1) + 1):
            for subset in combinations(parents, size):
                members[frozenset(subset) | {fam.child}].append(i)
    rows = []
    for cluster in sorted(members, key=lambda c: (len(c), sorted(c))):
        ids = members[cluster]
        if len(ids) >= 2:
            rows.append(LinearInequality({i: 1.0 for i in ids}, Sense.LE, 1.0, RowTag.PACKING,
                                         tuple(sorted(cluster))))
    return rows


def convex4b_rows(table: ScoreTable) -> List[LinearInequality]:
    """All 4B rows (one per 4-set and middle pair) touching at least three nodes."""
    rows = []
    for quad in combinations(range(table.p), 4):
        for middle in combinations(quad, 2):
            v1, v4 = [u for u in quad if u not in middle]
            row = convex4b_inequality(v1, middle[0], middle[1], v4, table)
            nodes = {table.families[i].child for i in row.coeffs}
            if len(nodes) >= 3:
                rows.append(row)
    return rows


def build_ip(table: ScoreTable, set_packing: bool = True, static_convex4b: bool = False,
             constraints: Sequence[EdgeConstraint] = ()) -> IpModel:
    """Objective, one convexity row per node and the optional static rows."""
    if constraints:
        table, edge_rows = apply_edge_constraints(table, constraints)
    else:
        edge_rows = []

    rows = [convexity_row(v, table) for v in range(table.p)]
    if set_packing:
        rows.extend(packing_rows(table))
    if static_convex4b:
        rows.extend(convex4b_rows(table))
    rows.extend(edge_rows)

    model = IpModel(table, table.scores(), rows,
                    {"set_packing": set_packing, "static_convex4b": static_convex4b})
    logger.info("Built IP: %d variables, rows %s", table.n, model.summary())
    return model


def characteristic_imset_entry(net: Network, cluster: Iterable[int]) -> int:
    """1 iff some member of C has every other member of C as a parent."""
    cluster = frozenset(cluster)
    if len(cluster) < 2:
        raise ValueError("imset entries are defined for |C| ≥ 2")
    return sum(1 for v in cluster if cluster - {v} <= net.parents[v])


def characteristic_imset(net: Network) -> Dict[FrozenSet[int], int]:
    """Sparse characteristic imset: the subsets whose entry is 1."""
    imset: Dict[FrozenSet[int], int] = {}
    for v, parents in enumerate(net.parents):
        ordered = sorted(parents)
        for size in range(1, len(ordered) + 1):
            for subset in combinations(ordered, size):
                imset[frozenset(subset) | {v}] = 1
    return imset
