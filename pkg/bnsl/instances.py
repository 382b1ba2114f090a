"""
BNSL - Instance Generator
Seeded random score tables, datasets and fractional points for tests and audits.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Tuple

import numpy as np

from .formats.dataset import Dataset
from .scoring import CandidateFamily, ScoreTable, prune_dominated


class InstanceKind(Enum):
    """Shapes of random score tables."""
    STRUCTURED = "structured"  # pairwise gains make some parents clearly useful
    UNIFORM = "uniform"        # independent scores per parent set
    DENSE = "dense"            # every extra parent pays off, so the LP wants cycles


@dataclass
class InstanceConfig:
    """Configuration for one random instance."""
    p: int = 4
    palim: int = 3
    seed: int = 0
    kind: InstanceKind = InstanceKind.STRUCTURED
    prune: bool = True
    base_range: Tuple[float, float] = (-60.0, -20.0)
    parent_penalty: float = 3.0
    gain_scale: float = 4.0
    noise: float = 1.0
    dense_gain: float = 2.0
    dense_noise: float = 2.0
    rows: int = 200
    max_arity: int = 3


class InstanceGenerator:
    """Produces reproducible instances from a single numpy Generator."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def score_table(self, config: InstanceConfig) -> ScoreTable:
        """Score every parent set up to palim, optionally dominance-pruned."""
        p = config.p
        palim = min(config.palim, p - 1)
        base = self.rng.uniform(*config.base_range, size=p)
        gains = self.rng.normal(0.0, config.gain_scale, size=(p, p))
        candidates: List[List[CandidateFamily]] = []
        for v in range(p):
            others = [u for u in range(p) if u != v]
            cands = []
            for size in range(palim + 1):
                for parents in combinations(others, size):
                    if config.kind == InstanceKind.DENSE:
                        score = base[v] + config.dense_gain * size + self.rng.normal(0.0, config.dense_noise)
                    elif config.kind == InstanceKind.UNIFORM:
                        score = base[v] - config.parent_penalty * size + self.rng.normal(0.0, config.gain_scale)
                    else:
                        score = (base[v] - config.parent_penalty * size
                                 + sum(gains[u, v] for u in parents)
                                 + self.rng.normal(0.0, config.noise) * (size > 0))
                    cands.append(CandidateFamily(v, frozenset(parents), float(score)))
            if config.prune:
                cands = prune_dominated(cands)
            candidates.append(cands)
        names = [f"X{v}" for v in range(p)]
        return ScoreTable(names, candidates, palim)

    def corpus(self, count: int, p_range: Tuple[int, int] = (3, 8), palim: int = 3,
               prune: bool = True, kind: InstanceKind = InstanceKind.STRUCTURED) -> List[ScoreTable]:
        tables = []
        for _ in range(count):
            p = int(self.rng.integers(p_range[0], p_range[1] + 1))
            tables.append(self.score_table(InstanceConfig(p=p, palim=palim, prune=prune, kind=kind)))
        return tables

    def dataset(self, config: InstanceConfig) -> Dataset:
        """Forward-sample rows from a random DAG with Dirichlet conditional tables."""
        p = config.p
        arities = self.rng.integers(2, config.max_arity + 1, size=p)
        order = self.rng.permutation(p)
        parents: Dict[int, List[int]] = {}
        for pos, v in enumerate(order):
            earlier = list(order[:pos])
            k = int(self.rng.integers(0, min(len(earlier), config.palim) + 1))
            parents[int(v)] = sorted(int(u) for u in self.rng.choice(earlier, size=k, replace=False)) if k else []

        tables = {}
        for v in range(p):
            q = int(np.prod([arities[u] for u in parents[v]])) if parents[v] else 1
            tables[v] = self.rng.dirichlet(np.full(arities[v], 0.5), size=q)

        rows = np.zeros((config.rows, p), dtype=np.int64)
        for v in order:
            v = int(v)
            if parents[v]:
                config_index = np.zeros(config.rows, dtype=np.int64)
                for u in parents[v]:
                    config_index = config_index * arities[u] + rows[:, u]
            else:
                config_index = np.zeros(config.rows, dtype=np.int64)
            probs = tables[v][config_index]
            draws = self.rng.random(config.rows)
            rows[:, v] = np.minimum((probs.cumsum(axis=1) < draws[:, None]).sum(axis=1), arities[v] - 1)
        names = tuple(f"X{v}" for v in range(p))
        return Dataset(names=names, arities=tuple(int(a) for a in arities), rows=rows)

    def convex_point(self, table: ScoreTable, density: float = 0.5) -> np.ndarray:
        """Random point with one unit of mass per node spread over a few candidates."""
        x = np.zeros(table.n)
        for v in range(table.p):
            ids = np.array(table.node_ids(v))
            keep = ids[self.rng.random(ids.size) < density]
            if keep.size == 0:
                keep = self.rng.choice(ids, size=1)
            weights = self.rng.dirichlet(np.ones(keep.size))
            x[keep] = weights
        return x


def three_node_half_point(table: ScoreTable) -> np.ndarray:
    """Each of nodes 0, 1, 2 takes the other two as parents with weight 1/2, else no parents.

    Satisfies every cluster constraint but breaks the three-node packing row.
    """
    x = np.zeros(table.n)
    for v in range(3):
        others = {0, 1, 2} - {v}
        x[table.family_id(v, others)] = 0.5
        x[table.family_id(v, ())] = 0.5
    return x


FOUR_NODE_HALF_FAMILIES = (
    (0, (2, 3)),
    (1, (0, 2)),
    (1, (0, 3)),
    (2, (1, 3)),
    (3, (0, 1)),
)


def four_node_half_point(table: ScoreTable) -> np.ndarray:
    """Five families at 1/2 with the empty sets taking the remaining mass.

    Satisfies every cluster and small packing row but breaks the 4B row
    with ends 0, 3 and middle pair {1, 2}.
    """
    x = np.zeros(table.n)
    for v, parents in FOUR_NODE_HALF_FAMILIES:
        x[table.family_id(v, parents)] = 0.5
    for v in range(4):
        x[table.family_id(v, ())] = 1.0 - float(x[list(table.node_ids(v))].sum())
    return x
