"""
BNSL - Branch and Cut
Best-bound search over LP relaxations: solve, separate, round, branch.
"""

import heapq
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from .config import (
    GAP_TOL,
    INT_TOL,
    NODE_CUT_ROUNDS,
    ROOT_CUT_ROUNDS,
    TAILING_OFF,
    SolverParams,
)
from .errors import LpError
from .ip_model import IpModel, LinearInequality, RowTag, exclusion_constraint
from .lp_simplex import LpBasis, LpSolution, LpStatus, solve_lp
from .network import Network
from .oracle import dag_vectors
from .scoring import ScoreTable
from .separation import Cut, find_cluster_cuts, find_convex4b_cuts, find_gomory_cuts
from .sink_heuristic import sink_find

logger = logging.getLogger(__name__)

Fixings = Dict[int, int]
IntegralHook = Callable[[LpSolution, np.ndarray, Fixings], None]


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_TIMEOUT = "feasible-timeout"
    INFEASIBLE = "infeasible"


@dataclass
class SolverStats:
    nodes: int = 0
    lp_solves: int = 0
    lp_pivots: int = 0
    cuts: Dict[str, int] = field(default_factory=lambda: defaultdict(int))
    heuristic_calls: int = 0
    heuristic_successes: int = 0
    propagation_fixings: int = 0
    max_depth: int = 0
    elapsed: float = 0.0
    audit_checks: int = 0
    audit_violations: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict:
        return {
            "nodes": self.nodes,
            "lp_solves": self.lp_solves,
            "lp_pivots": self.lp_pivots,
            "cuts": dict(self.cuts),
            "heuristic_calls": self.heuristic_calls,
            "heuristic_successes": self.heuristic_successes,
            "propagation_fixings": self.propagation_fixings,
            "max_depth": self.max_depth,
            "elapsed": round(self.elapsed, 3),
        }


@dataclass
class SolveResult:
    best: Optional[Network]
    best_score: float
    upper_bound: float
    status: SolveStatus
    stats: SolverStats

    @property
    def gap(self) -> float:
        """(upper - best) / |best|; zero at proven optimality."""
        if self.best is None:
            return float("inf")
        diff = max(self.upper_bound - self.best_score, 0.0)
        if diff <= GAP_TOL:
            return 0.0
        if self.best_score == 0.0:
            return float("inf")
        return diff / abs(self.best_score)


@dataclass
class SearchNode:
    fixings: Fixings
    local_cuts: List[LinearInequality]
    bound: float
    depth: int
    basis: Optional[LpBasis] = None


def propagate(fix: Fixings, table: ScoreTable) -> Optional[Tuple[Fixings, int]]:
    """Close the fixings under the one-family, last-survivor and no-cycle rules.

    Returns the extended fixings and the number of new fixings, or None on conflict.
    """
    fix = dict(fix)
    start = len(fix)
    changed = True
    while changed:
        changed = False
        chosen: Dict[int, int] = {}
        for v in range(table.p):
            ids = table.node_ids(v)
            ones = [i for i in ids if fix.get(i) == 1]
            if len(ones) > 1:
                return None
            if ones:
                chosen[v] = ones[0]
                for i in ids:
                    if i != ones[0] and i not in fix:
                        fix[i] = 0
                        changed = True
                continue
            open_ids = [i for i in ids if fix.get(i) != 0]
            if not open_ids:
                return None
            if len(open_ids) == 1:
                fix[open_ids[0]] = 1
                chosen[v] = open_ids[0]
                changed = True

        graph = nx.DiGraph()
        graph.add_nodes_from(range(table.p))
        for v, i in chosen.items():
            graph.add_edges_from((u, v) for u in table.families[i].parents)
        if not nx.is_directed_acyclic_graph(graph):
            return None
        for v in range(table.p):
            if v in chosen:
                continue
            below = nx.descendants(graph, v)
            if not below:
                continue
            for i, cand in zip(table.node_ids(v), table.candidates[v]):
                if i not in fix and cand.parents & below:
                    fix[i] = 0
                    changed = True
    return fix, len(fix) - start


def select_branch_var(xstar: LpSolution, objective: np.ndarray) -> int:
    """Most fractional variable, then largest objective coefficient, then lowest index."""
    x = xstar.values if isinstance(xstar, LpSolution) else np.asarray(xstar)
    frac = np.minimum(x - np.floor(x), np.ceil(x) - x)
    candidates = np.flatnonzero(frac > INT_TOL)
    if candidates.size == 0:
        raise ValueError("branching needs a fractional variable")
    return int(min(candidates, key=lambda i: (-frac[i], -objective[i], i)))


class BranchAndCut:
    """One search over an IpModel."""

    def __init__(self, model: IpModel, params: Optional[SolverParams] = None,
                 on_integral: Optional[IntegralHook] = None):
        self.model = model
        self.table = model.table
        self.params = params or SolverParams()
        self.on_integral = on_integral
        self.stats = SolverStats()
        self.pool: List[LinearInequality] = []
        self.registry: Set[FrozenSet[int]] = set()
        self.incumbent: Optional[Network] = None
        self.best_score = -np.inf
        self._seq = 0
        self._start = 0.0
        self._last_report = 0.0
        self._audit_vectors: Optional[np.ndarray] = None
        if self.params.audit:
            self._prepare_audit()

    # -- incumbent --------------------------------------------------

    def _feasible_network(self, net: Network) -> bool:
        if not net.is_acyclic() or not net.is_representable(self.table):
            return False
        return self.model.is_feasible(net.family_vector(self.table))

    def _offer(self, net: Optional[Network], source: str) -> bool:
        if net is None or not self._feasible_network(net):
            return False
        net = net.rescored(self.table)
        better = net.score > self.best_score + 1e-12
        tie = abs(net.score - self.best_score) <= 1e-12 and self.incumbent is not None \
            and net.sort_key() < self.incumbent.sort_key()
        if better or tie:
            self.incumbent = net
            self.best_score = net.score
            logger.info("New incumbent %.6f from %s", net.score, source)
            return True
        return False

    # -- audit ------------------------------------------------------

    def _prepare_audit(self):
        if self.table.p > 4:
            logger.warning("Cut audit needs p ≤ 4; audit disabled for p=%d", self.table.p)
            return
        vectors = dag_vectors(self.table)
        keep = [row for row in vectors if self.model.is_feasible(row)]
        self._audit_vectors = np.array(keep).reshape(len(keep), self.table.n)

    def _audit(self, cuts: List[Cut], fix: Fixings):
        if self._audit_vectors is None:
            return
        vectors = self._audit_vectors
        if fix:
            ids = np.array(list(fix.keys()))
            vals = np.array(list(fix.values()), dtype=float)
            vectors = vectors[np.all(vectors[:, ids] == vals, axis=1)]
        for cut in cuts:
            self.stats.audit_checks += 1
            for vec in vectors:
                if cut.inequality.violation(vec) > 1e-9:
                    msg = f"{cut.source.value} cut {cut.inequality.scope} cuts off a DAG"
                    logger.error(msg)
                    self.stats.audit_violations.append(msg)
                    break

    # -- progress ---------------------------------------------------

    def _report(self, bound: float, force: bool = False):
        now = time.monotonic()
        if not force and now - self._last_report < self.params.progress_interval:
            return
        self._last_report = now
        if self.incumbent is None:
            gap_text = "inf"
        else:
            diff = max(bound - self.best_score, 0.0)
            gap_text = f"{100.0 * diff / abs(self.best_score):.2f}" if self.best_score else "0.00"
        logger.info("%.1fs nodes=%d incumbent=%.6f bound=%.6f gap=%s%%",
                    now - self._start, self.stats.nodes, self.best_score, bound, gap_text)

    # -- search -----------------------------------------------------

    def _push(self, heap: list, node: SearchNode):
        self._seq += 1
        heapq.heappush(heap, (-node.bound, self._seq, node))

    def _limits_hit(self) -> bool:
        if time.monotonic() - self._start > self.params.time_limit:
            return True
        limit = self.params.node_limit
        return limit is not None and self.stats.nodes >= limit

    def run(self) -> SolveResult:
        self._start = time.monotonic()
        self._last_report = self._start
        heap: list = []
        root_fix: Fixings = {}
        if self.params.propagation:
            closed = propagate(root_fix, self.table)
            if closed is None:
                return self._finish(heap, SolveStatus.INFEASIBLE)
            root_fix, added = closed
            self.stats.propagation_fixings += added
        self._push(heap, SearchNode(root_fix, [], np.inf, 0))

        timed_out = False
        while heap:
            neg_bound, _, node = heap[0]
            if -neg_bound <= self.best_score + GAP_TOL:
                heap.clear()
                break
            if self._limits_hit():
                timed_out = True
                break
            heapq.heappop(heap)
            self.stats.nodes += 1
            self.stats.max_depth = max(self.stats.max_depth, node.depth)
            self._process(node, heap)
            self._report(max([-b for b, _, _ in heap] + [self.best_score]))

        if timed_out:
            return self._finish(heap, SolveStatus.FEASIBLE_TIMEOUT)
        status = SolveStatus.OPTIMAL if self.incumbent is not None else SolveStatus.INFEASIBLE
        return self._finish(heap, status)

    def _finish(self, heap: list, status: SolveStatus) -> SolveResult:
        self.stats.elapsed = time.monotonic() - self._start
        if status == SolveStatus.FEASIBLE_TIMEOUT:
            upper = max([-b for b, _, _ in heap] + [self.best_score])
        else:
            upper = self.best_score
        result = SolveResult(self.incumbent, float(self.best_score), float(upper), status, self.stats)
        self._report(upper, force=True)
        return result

    def _solve(self, node: SearchNode, local: List[LinearInequality],
               warm: Optional[LpBasis]) -> LpSolution:
        sol = solve_lp(self.model, self.pool + local, node.fixings, warm)
        self.stats.lp_solves += 1
        self.stats.lp_pivots += sol.pivots
        if sol.status == LpStatus.UNBOUNDED:
            raise LpError("LP relaxation reported unbounded")
        return sol

    def _process(self, node: SearchNode, heap: list):
        fix = node.fixings
        local = list(node.local_cuts)
        warm = node.basis
        max_rounds = ROOT_CUT_ROUNDS if node.depth == 0 else NODE_CUT_ROUNDS
        rounds = 0
        while True:
            sol = self._solve(node, local, warm)
            if sol.status == LpStatus.INFEASIBLE:
                return
            warm = sol.basis
            bound = min(sol.objective, node.bound)
            if bound <= self.best_score + GAP_TOL:
                return

            integral = sol.is_integral()
            point = np.round(sol.values) if integral else sol.values

            if self.params.sink_heuristic:
                self.stats.heuristic_calls += 1
                if self._offer(sink_find(point, self.table, fix), "sink heuristic"):
                    self.stats.heuristic_successes += 1
                if bound <= self.best_score + GAP_TOL:
                    return

            if integral:
                net = Network.from_vector(point, self.table)
                if net.is_acyclic():
                    if self.on_integral is not None:
                        self.on_integral(sol, point, fix)
                    self._offer(net, "integral LP")
                    return
                cuts = find_cluster_cuts(point, self.table, self.registry)
                if not cuts:
                    raise LpError("cyclic integral point without a violated cluster")
                self._add_cuts(cuts, local, fix)
                continue

            if rounds >= max_rounds:
                break
            cuts = find_cluster_cuts(sol, self.table, self.registry)
            if not cuts:
                if self.params.convex4b:
                    cuts.extend(find_convex4b_cuts(sol, self.table))
                if self.params.gomory:
                    cuts.extend(find_gomory_cuts(sol, self.model))
            if not cuts or sum(c.violation for c in cuts) < TAILING_OFF:
                break
            self._add_cuts(cuts, local, fix)
            rounds += 1

        var = select_branch_var(sol, self.model.objective)
        for value in (1, 0):
            child = dict(fix)
            child[var] = value
            if self.params.propagation:
                closed = propagate(child, self.table)
                if closed is None:
                    continue
                child, added = closed
                self.stats.propagation_fixings += added
            self._push(heap, SearchNode(child, list(local), bound, node.depth + 1, warm))

    def _add_cuts(self, cuts: List[Cut], local: List[LinearInequality], fix: Fixings):
        if self.params.audit:
            self._audit(cuts, fix)
        for cut in cuts:
            self.stats.cuts[cut.source.value] += 1
            if cut.source == RowTag.GOMORY:
                local.append(cut.inequality)
            else:
                if cut.source == RowTag.CLUSTER:
                    self.registry.add(cut.cluster)
                self.pool.append(cut.inequality)


def branch_and_cut(model: IpModel, params: Optional[SolverParams] = None,
                   on_integral: Optional[IntegralHook] = None) -> SolveResult:
    """Best network for the model, with a proven bound unless a limit stopped the search."""
    return BranchAndCut(model, params, on_integral).run()


def solve_kbest(model: IpModel, k: int, params: Optional[SolverParams] = None) -> List[SolveResult]:
    """Top-k networks by repeatedly excluding the previous optimum.

    A rank stopped by a limit is kept, even without a network, and ends the sequence.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    results: List[SolveResult] = []
    current = model
    for rank in range(k):
        result = branch_and_cut(current, params)
        if result.status == SolveStatus.INFEASIBLE:
            break
        results.append(result)
        logger.info("Rank %d: %.6f (%s)", rank + 1, result.best_score, result.status.value)
        if result.status != SolveStatus.OPTIMAL:
            break
        current = current.extended([exclusion_constraint(result.best, model.table)])
    return results
