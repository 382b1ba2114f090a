"""
BNSL - Sink Heuristic
Greedy rounding of an LP point into an acyclic network by repeatedly fixing a sink.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .network import Network
from .scoring import ScoreTable

logger = logging.getLogger(__name__)


class SinkAbort(Exception):
    """The greedy construction cannot respect the current fixings."""


@dataclass
class SinkState:
    """Availability of every candidate plus the sinks chosen so far (last sink first)."""
    table: ScoreTable
    available: List[np.ndarray]
    remaining: List[int]
    selected: List[Tuple[int, int]] = field(default_factory=list)
    fixed_one: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def initial(cls, table: ScoreTable, fix: Mapping[int, int]) -> "SinkState":
        available = [np.ones(len(table.candidates[v]), dtype=bool) for v in range(table.p)]
        fixed_one: Dict[int, int] = {}
        for var, value in fix.items():
            child = table.families[var].child
            local = var - table.node_ids(child).start
            if value == 0:
                available[child][local] = False
            else:
                if child in fixed_one and fixed_one[child] != var:
                    raise SinkAbort(f"two families of node {child} fixed to one")
                fixed_one[child] = var
        for child, var in fixed_one.items():
            keep = var - table.node_ids(child).start
            if not available[child][keep]:
                raise SinkAbort(f"family {var} fixed to both values")
            available[child][:] = False
            available[child][keep] = True
        return cls(table, available, list(range(table.p)), fixed_one=fixed_one)

    def ok(self, v: int) -> np.ndarray:
        """Family ids of node v still available, best score first."""
        ids = self.table.node_ids(v)
        return np.flatnonzero(self.available[v]) + ids.start

    def best(self, v: int) -> Optional[int]:
        ok = self.ok(v)
        return int(ok[0]) if ok.size else None

    def cost(self, v: int, x: np.ndarray) -> float:
        best = self.best(v)
        if not self.selected:
            return 1.0 - float(x[best])
        return float(x[self.ok(v)].sum()) - float(x[best])

    def destroyed(self, v: int, x: np.ndarray) -> float:
        """LP mass of other remaining nodes' available candidates that contain v."""
        total = 0.0
        for u in self.remaining:
            if u == v:
                continue
            for i in self.ok(u):
                if v in self.table.families[i].parents:
                    total += float(x[i])
        return total

    def commit(self, v: int):
        fam = self.best(v)
        self.selected.append((v, fam))
        self.remaining.remove(v)
        for u in self.remaining:
            start = self.table.node_ids(u).start
            for local, cand in enumerate(self.table.candidates[u]):
                if self.available[u][local] and v in cand.parents:
                    if self.fixed_one.get(u) == start + local:
                        raise SinkAbort(f"fixed family of node {u} uses node {v}")
                    self.available[u][local] = False


def sink_find(xstar, table: ScoreTable, fix: Optional[Mapping[int, int]] = None) -> Optional[Network]:
    """Build an acyclic network from the LP point; None when the construction aborts.

    Each round picks the remaining node whose best available parent set is
    cheapest to commit to, ties broken by the LP mass the pick would remove
    from the other nodes, then by node index. Breaking ties on node index alone
    can pick a sink whose committed family differs from an integral LP point.
    """
    x = np.asarray(getattr(xstar, "values", xstar), dtype=float)
    try:
        state = SinkState.initial(table, fix or {})
        while state.remaining:
            choices = []
            for v in state.remaining:
                if state.best(v) is None:
                    raise SinkAbort(f"node {v} has no available parent set")
                choices.append((state.cost(v, x), state.destroyed(v, x), v))
            _, _, v = min(choices)
            state.commit(v)
    except SinkAbort as exc:
        logger.debug("Sink heuristic aborted: %s", exc)
        return None
    return Network.from_families([table.families[fam] for _, fam in state.selected])
