"""
BNSL - Network
A learned structure: one parent set per node plus its total score.
"""

from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .scoring import CandidateFamily, ScoreTable


@dataclass(frozen=True)
class Network:
    """One parent set per node; score is the sum of local scores (nats)."""
    parents: Tuple[FrozenSet[int], ...]
    score: float

    @property
    def p(self) -> int:
        return len(self.parents)

    @classmethod
    def from_families(cls, families: Sequence[CandidateFamily]) -> "Network":
        """Assemble a network from exactly one family per node."""
        by_child = {}
        for fam in families:
            if fam.child in by_child:
                raise ValueError(f"node {fam.child} has more than one parent set")
            by_child[fam.child] = fam
        p = len(by_child)
        if sorted(by_child) != list(range(p)):
            raise ValueError("every node needs exactly one parent set")
        return cls(
            parents=tuple(by_child[v].parents for v in range(p)),
            score=float(sum(by_child[v].score for v in range(p))),
        )

    @classmethod
    def from_vector(cls, values: np.ndarray, table: ScoreTable) -> "Network":
        """Read the network off a 0/1 family vector."""
        chosen = [table.families[i] for i in np.flatnonzero(np.asarray(values) > 0.5)]
        return cls.from_families(chosen)

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for v, ps in enumerate(self.parents) for u in sorted(ps)]

    def to_digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.p))
        graph.add_edges_from(self.edges())
        return graph

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.to_digraph())

    def family_ids(self, table: ScoreTable) -> List[int]:
        """Family ids of this network in the table (KeyError if not representable)."""
        return [table.family_id(v, ps) for v, ps in enumerate(self.parents)]

    def is_representable(self, table: ScoreTable) -> bool:
        return all(table.has_family(v, ps) for v, ps in enumerate(self.parents))

    def family_vector(self, table: ScoreTable) -> np.ndarray:
        x = np.zeros(table.n)
        x[self.family_ids(table)] = 1.0
        return x

    def rescored(self, table: ScoreTable) -> "Network":
        ids = self.family_ids(table)
        return Network(self.parents, float(sum(table.families[i].score for i in ids)))

    def sort_key(self) -> Tuple[Tuple[int, ...], ...]:
        """Lexicographic key used to break score ties between networks."""
        return tuple(tuple(sorted(ps)) for ps in self.parents)

    def describe(self, names: Optional[Iterable[str]] = None) -> str:
        names = list(names) if names is not None else [str(v) for v in range(self.p)]
        parts = []
        for v, ps in enumerate(self.parents):
            parts.append(f"{names[v]}<-{{{','.join(names[u] for u in sorted(ps))}}}")
        return " ".join(parts)
