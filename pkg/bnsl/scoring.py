"""
BNSL - Scoring Module
BDeu local scores, candidate parent-set enumeration and dominance pruning.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .formats.dataset import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateFamily:
    """One (child, parent set, local score) triple."""
    child: int
    parents: FrozenSet[int]
    score: float

    def __post_init__(self):
        if self.child in self.parents:
            raise ValueError(f"node {self.child} cannot be its own parent")
        if not np.isfinite(self.score):
            raise ValueError(f"non-finite score for node {self.child}")

    @property
    def sorted_parents(self) -> Tuple[int, ...]:
        return tuple(sorted(self.parents))

    def order_key(self) -> Tuple[float, Tuple[int, ...]]:
        # Score descending, then lexicographically smaller parent set
        return (-self.score, self.sorted_parents)


@dataclass
class ContingencyCounts:
    """Sparse counts n_jk for one (v, W): parent configuration -> child value counts."""
    child_arity: int
    counts: Dict[Tuple[int, ...], np.ndarray] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(sum(c.sum() for c in self.counts.values()))


class ScoreTable:
    """Per-node candidate lists, sorted by score descending, flattened into family ids."""

    def __init__(self, names: Sequence[str], candidates: Sequence[Iterable[CandidateFamily]],
                 palim: Optional[int] = None):
        self.names: Tuple[str, ...] = tuple(names)
        per_node: List[List[CandidateFamily]] = []
        for v, cands in enumerate(candidates):
            cands = sorted(cands, key=CandidateFamily.order_key)
            seen = set()
            for cand in cands:
                if cand.child != v:
                    raise ValueError(f"candidate for node {cand.child} listed under node {v}")
                if cand.parents in seen:
                    raise ValueError(f"duplicate parent set {cand.sorted_parents} for node {v}")
                seen.add(cand.parents)
            per_node.append(cands)
        if len(per_node) != len(self.names):
            raise ValueError("one candidate list per node required")
        self.candidates: Tuple[Tuple[CandidateFamily, ...], ...] = tuple(tuple(c) for c in per_node)
        if palim is None:
            palim = max((len(c.parents) for cands in self.candidates for c in cands), default=0)
        self.palim = palim

        self.families: Tuple[CandidateFamily, ...] = tuple(c for cands in self.candidates for c in cands)
        self._offsets: List[int] = []
        offset = 0
        for cands in self.candidates:
            self._offsets.append(offset)
            offset += len(cands)
        self._index: Dict[Tuple[int, FrozenSet[int]], int] = {
            (f.child, f.parents): i for i, f in enumerate(self.families)
        }

    @property
    def p(self) -> int:
        return len(self.names)

    @property
    def n(self) -> int:
        return len(self.families)

    def node_ids(self, v: int) -> range:
        """Family ids of node v, best candidate first."""
        return range(self._offsets[v], self._offsets[v] + len(self.candidates[v]))

    def family_id(self, child: int, parents: Iterable[int]) -> int:
        return self._index[(child, frozenset(parents))]

    def has_family(self, child: int, parents: Iterable[int]) -> bool:
        return (child, frozenset(parents)) in self._index

    def scores(self) -> np.ndarray:
        return np.array([f.score for f in self.families], dtype=float)

    def without(self, removed: Iterable[int]) -> "ScoreTable":
        """Copy of the table with the given family ids deleted."""
        removed = set(removed)
        kept = [[f for i, f in zip(self.node_ids(v), self.candidates[v]) if i not in removed]
                for v in range(self.p)]
        return ScoreTable(self.names, kept, self.palim)

    def as_dict(self) -> Dict[int, Dict[FrozenSet[int], float]]:
        return {v: {c.parents: c.score for c in cands} for v, cands in enumerate(self.candidates)}

    def __repr__(self):
        return f"ScoreTable(p={self.p}, n={self.n}, palim={self.palim})"


def count_configurations(data: Dataset, v: int, parents: Iterable[int]) -> ContingencyCounts:
    """Tally child value counts per observed parent configuration."""
    parents = sorted(parents)
    if v in parents:
        raise ValueError(f"node {v} cannot be its own parent")
    result = ContingencyCounts(child_arity=data.arities[v])
    if data.n_rows == 0:
        return result

    columns = data.rows[:, parents + [v]]
    configs, tallies = np.unique(columns, axis=0, return_counts=True)
    for config, tally in zip(configs, tallies):
        key = tuple(int(x) for x in config[:-1])
        vec = result.counts.get(key)
        if vec is None:
            vec = np.zeros(data.arities[v], dtype=np.int64)
            result.counts[key] = vec
        vec[int(config[-1])] += int(tally)
    return result


def bdeu_local_score(counts: ContingencyCounts, r_v: int, q_w: int, ess: float = 1.0) -> float:
    """BDeu log marginal likelihood (nats) of one family from its sufficient statistics."""
    if ess <= 0:
        raise ValueError("ess must be positive")
    if not counts.counts:
        return 0.0
    alpha_j = ess / q_w
    alpha_jk = ess / (q_w * r_v)
    table = np.array(list(counts.counts.values()), dtype=float)
    n_j = table.sum(axis=1)
    score = np.sum(gammaln(alpha_j) - gammaln(alpha_j + n_j))
    score += np.sum(gammaln(alpha_jk + table) - gammaln(alpha_jk))
    return float(score)


def score_family(data: Dataset, v: int, parents: Iterable[int], ess: float = 1.0) -> float:
    parents = tuple(sorted(parents))
    q_w = 1
    for u in parents:
        q_w *= data.arities[u]
    return bdeu_local_score(count_configurations(data, v, parents), data.arities[v], q_w, ess)


def prune_dominated(cands: Sequence[CandidateFamily]) -> List[CandidateFamily]:
    """Drop W' whenever a retained W ⊂ W' scores at least as well."""
    if not cands:
        return []
    children = {c.child for c in cands}
    if len(children) != 1:
        raise ValueError("prune_dominated expects candidates of a single child")

    retained: Dict[FrozenSet[int], float] = {}
    for cand in sorted(cands, key=lambda c: (len(c.parents), c.sorted_parents)):
        dominated = False
        if len(cand.parents) <= 12:
            for size in range(len(cand.parents)):
                for subset in combinations(cand.sorted_parents, size):
                    score = retained.get(frozenset(subset))
                    if score is not None and score >= cand.score:
                        dominated = True
                        break
                if dominated:
                    break
        else:
            dominated = any(w < cand.parents and s >= cand.score for w, s in retained.items())
        if not dominated:
            retained[cand.parents] = cand.score

    kept = [c for c in cands if c.parents in retained]
    return sorted(kept, key=CandidateFamily.order_key)


def enumerate_candidates(data: Dataset, v: int, palim: int, ess: float = 1.0,
                         pruning: bool = True,
                         forbidden_parents: Iterable[int] = ()) -> List[CandidateFamily]:
    """Score every parent set of size ≤ palim for node v, then prune dominated ones."""
    if palim < 0 or palim > max(data.p - 1, 0):
        raise ValueError(f"palim {palim} out of range for {data.p} nodes")
    others = [u for u in range(data.p) if u != v and u not in set(forbidden_parents)]
    cands = []
    for size in range(palim + 1):
        for parents in combinations(others, size):
            cands.append(CandidateFamily(v, frozenset(parents), score_family(data, v, parents, ess)))
    if pruning:
        cands = prune_dominated(cands)
    return sorted(cands, key=CandidateFamily.order_key)


def build_score_table(data: Dataset, palim: int = 3, ess: float = 1.0, pruning: bool = True,
                      workers: int = 1,
                      forbidden: Iterable[Tuple[int, int]] = ()) -> ScoreTable:
    """Score all nodes of a dataset into a ScoreTable.

    Args:
        forbidden: (parent, child) pairs never offered as candidates
        workers: threads used for scoring; the merge order is always node order
    """
    palim = min(palim, max(data.p - 1, 0))
    banned: Dict[int, List[int]] = {v: [] for v in range(data.p)}
    for u, v in forbidden:
        banned[v].append(u)

    def node_candidates(v: int) -> List[CandidateFamily]:
        return enumerate_candidates(data, v, palim, ess, pruning, banned[v])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_node = list(pool.map(node_candidates, range(data.p)))
    else:
        per_node = [node_candidates(v) for v in range(data.p)]

    logger.info("Scored %d nodes: %d candidate families kept", data.p, sum(len(c) for c in per_node))
    return ScoreTable(data.names, per_node, palim)
