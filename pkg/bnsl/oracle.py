"""
BNSL - Oracles
Ground truth for tests and audits: labeled DAG enumeration, exhaustive ranking of
representable networks, and dynamic programming over node subsets.
"""

import logging
from itertools import combinations
from math import comb
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .network import Network
from .scoring import CandidateFamily, ScoreTable

logger = logging.getLogger(__name__)

# One DAG on a node subset: (node, parent mask, payload) per node, sorted by node
_Dag = Tuple[Tuple[int, int, int], ...]
_Choices = Callable[[int, int, int], Iterable[Tuple[int, int]]]


def _mask(nodes: Iterable[int]) -> int:
    m = 0
    for u in nodes:
        m |= 1 << u
    return m


def _members(mask: int) -> List[int]:
    return [u for u in range(mask.bit_length()) if mask >> u & 1]


def _sinks(dag: _Dag) -> int:
    used = 0
    nodes = 0
    for v, pmask, _ in dag:
        used |= pmask
        nodes |= 1 << v
    return nodes & ~used


class _CanonicalEnumerator:
    """Every DAG exactly once, generated by removing its smallest-labelled sink.

    A DAG on S is (s, D, P) where s is its smallest sink, D the DAG on S - {s}
    and P the parents of s; P must contain every sink of D smaller than s.
    """

    def __init__(self, choices: _Choices):
        self.choices = choices
        self.memo: Dict[int, List[_Dag]] = {0: [()]}

    def dags(self, mask: int) -> List[_Dag]:
        if mask in self.memo:
            return self.memo[mask]
        result: List[_Dag] = []
        for s in _members(mask):
            rest = mask & ~(1 << s)
            below = (1 << s) - 1
            for dag in self.dags(rest):
                required = _sinks(dag) & below
                for pmask, payload in self.choices(s, rest, required):
                    result.append(tuple(sorted(dag + ((s, pmask, payload),))))
        self.memo[mask] = result
        return result


def _all_subsets(s: int, rest: int, required: int) -> Iterable[Tuple[int, int]]:
    free = _members(rest & ~required)
    for size in range(len(free) + 1):
        for extra in combinations(free, size):
            pmask = required | _mask(extra)
            yield pmask, pmask


def enumerate_dags(p: int) -> List[Tuple[FrozenSet[int], ...]]:
    """All labeled DAGs on p nodes as parent-set tuples."""
    if p < 0:
        raise ValueError("node count must be non-negative")
    if p > 6:
        raise ValueError("DAG enumeration is limited to p ≤ 6")
    dags = _CanonicalEnumerator(_all_subsets).dags((1 << p) - 1)
    return [tuple(frozenset(_members(pmask)) for _, pmask, _ in dag) for dag in dags]


def count_labeled_dags(p: int) -> int:
    """Number of labeled DAGs on p nodes by inclusion-exclusion over source sets."""
    a = [1]
    for n in range(1, p + 1):
        a.append(sum((-1) ** (k + 1) * comb(n, k) * 2 ** (k * (n - k)) * a[n - k]
                     for k in range(1, n + 1)))
    return a[p]


def _table_choices(table: ScoreTable) -> _Choices:
    masks = [[(_mask(c.parents), i) for i, c in zip(table.node_ids(v), table.candidates[v])]
             for v in range(table.p)]

    def choices(s: int, rest: int, required: int):
        for pmask, fid in masks[s]:
            if pmask & ~rest == 0 and pmask & required == required:
                yield pmask, fid
    return choices


def representable_dags(table: ScoreTable) -> List[List[int]]:
    """Family-id lists of every acyclic structure the table can express."""
    if table.p > 6:
        raise ValueError("exhaustive enumeration is limited to p ≤ 6")
    dags = _CanonicalEnumerator(_table_choices(table)).dags((1 << table.p) - 1)
    return [[fid for _, _, fid in dag] for dag in dags]


def dag_vectors(table: ScoreTable) -> np.ndarray:
    """0/1 family vectors of every representable DAG, one per row."""
    dags = representable_dags(table)
    vectors = np.zeros((len(dags), table.n))
    for row, fids in enumerate(dags):
        vectors[row, fids] = 1.0
    return vectors


def complete_table(p: int, palim: Optional[int] = None,
                   score: Callable[[int, FrozenSet[int]], float] = lambda v, w: 0.0) -> ScoreTable:
    """Every parent set up to palim for every node, scored by `score`."""
    palim = p - 1 if palim is None else min(palim, p - 1)
    candidates = []
    for v in range(p):
        others = [u for u in range(p) if u != v]
        cands = []
        for size in range(palim + 1):
            for parents in combinations(others, size):
                w = frozenset(parents)
                cands.append(CandidateFamily(v, w, float(score(v, w))))
        candidates.append(cands)
    return ScoreTable([str(v) for v in range(p)], candidates, palim)


def exhaustive_best(table: ScoreTable) -> List[Tuple[Network, float]]:
    """All representable acyclic networks, best score first, ties by parent sets."""
    ranked = []
    for fids in representable_dags(table):
        net = Network.from_families([table.families[i] for i in fids])
        ranked.append((net, net.score))
    ranked.sort(key=lambda item: (-item[1], item[0].sort_key()))
    return ranked


def dp_best(table: ScoreTable) -> Tuple[Network, float]:
    """Optimal network by the sink recurrence over node subsets."""
    p = table.p
    if p > 20:
        raise ValueError("subset DP is limited to p ≤ 20")
    cands = [[(_mask(c.parents), i, c.score) for i, c in zip(table.node_ids(v), table.candidates[v])]
             for v in range(p)]

    def best_family(v: int, allowed: int) -> Tuple[float, int]:
        # Candidates are score sorted, so the first fitting one is the best
        for pmask, fid, score in cands[v]:
            if pmask & ~allowed == 0:
                return score, fid
        return -np.inf, -1

    full = (1 << p) - 1
    best = np.full(1 << p, -np.inf)
    best[0] = 0.0
    choice: Dict[int, Tuple[int, int]] = {}
    for mask in range(1, full + 1):
        top = -np.inf
        pick = None
        for v in _members(mask):
            rest = mask & ~(1 << v)
            score, fid = best_family(v, rest)
            total = score + best[rest]
            if total > top:
                top, pick = total, (v, fid)
        best[mask] = top
        if pick is not None:
            choice[mask] = pick

    if not np.isfinite(best[full]):
        raise ValueError("no acyclic network is representable")
    families = []
    mask = full
    while mask:
        v, fid = choice[mask]
        families.append(table.families[fid])
        mask &= ~(1 << v)
    net = Network.from_families(families)
    return net, float(best[full])
