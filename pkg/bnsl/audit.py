"""
BNSL - Audit Module
Cross-checks between the branch-and-cut learner, the oracles and the polytope theory.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional

from .config import SolverParams
from .instances import (
    InstanceConfig,
    InstanceGenerator,
    InstanceKind,
    four_node_half_point,
    three_node_half_point,
)
from .ip_model import (
    build_ip,
    characteristic_imset,
    chvatal2_inequality,
    cluster_inequality,
    convex4b_inequality,
    knapsack_form,
    set_packing_inequality,
)
from .network import Network
from .oracle import complete_table, count_labeled_dags, dag_vectors, dp_best, enumerate_dags, exhaustive_best
from .scoring import ScoreTable, prune_dominated
from .separation import find_cluster_cuts, find_cluster_cuts_bruteforce
from .solver import SolveStatus, branch_and_cut, solve_kbest

logger = logging.getLogger(__name__)

SCORE_TOL = 1e-6

# Markov equivalence classes of labeled DAGs
MARKOV_CLASSES = {3: 11, 4: 185}


@dataclass
class AuditFinding:
    """Outcome of one audit check."""
    check: str
    passed: bool
    severity: str  # 'info', 'high', 'critical'
    detail: str


class InstanceAuditor:
    """Runs the verification suite on one instance or a seeded corpus."""

    def __init__(self, table: Optional[ScoreTable] = None, seed: int = 0, trials: int = 20,
                 params: Optional[SolverParams] = None, count_p5: bool = False):
        self.table = table
        self.seed = seed
        self.trials = trials
        self.params = params or SolverParams()
        self.count_p5 = count_p5
        self.findings: List[AuditFinding] = []

    def _record(self, check: str, passed: bool, detail: str, severity: str = "critical"):
        finding = AuditFinding(check, passed, "info" if passed else severity, detail)
        self.findings.append(finding)
        if not passed:
            logger.error("Audit %s failed: %s", check, detail)

    def run(self) -> List[AuditFinding]:
        self.findings = []
        self.check_dag_counts()
        self.check_half_points()
        if self.table is not None:
            self.check_instance(self.table)
        else:
            self.check_corpus()
        return self.findings

    # -- polytope facts ---------------------------------------------

    def check_dag_counts(self):
        sizes = [3, 4, 5] if self.count_p5 else [3, 4]
        for p in sizes:
            found = len(enumerate_dags(p))
            expected = count_labeled_dags(p)
            self._record(f"dag_count_p{p}", found == expected, f"{found} enumerated, {expected} expected")

        for p, expected in MARKOV_CLASSES.items():
            classes = {frozenset(characteristic_imset(Network(parents, 0.0))) for parents in enumerate_dags(p)}
            self._record(f"markov_classes_p{p}", len(classes) == expected,
                         f"{len(classes)} imset classes, {expected} expected")

    def check_half_points(self):
        table3 = complete_table(3)
        y = three_node_half_point(table3)
        clusters_ok = not find_cluster_cuts_bruteforce(y, table3)
        packing = set_packing_inequality((0, 1, 2), table3).lhs(y)
        self._record("three_node_point", clusters_ok and abs(packing - 1.5) <= 1e-12,
                     f"clusters satisfied={clusters_ok}, packing lhs={packing:.6f}")

        table4 = complete_table(4)
        z = four_node_half_point(table4)
        clusters_ok = not find_cluster_cuts_bruteforce(z, table4)
        packing_ok = all(set_packing_inequality(c, table4).violation(z) <= 1e-12
                         for size in (2, 3, 4) for c in combinations(range(4), size))
        lhs = convex4b_inequality(0, 1, 2, 3, table4).lhs(z)
        self._record("four_node_point", clusters_ok and packing_ok and abs(lhs - 2.5) <= 1e-12,
                     f"clusters satisfied={clusters_ok}, packing satisfied={packing_ok}, 4B lhs={lhs:.6f}")

    def check_inequality_validity(self, table: ScoreTable):
        """Every constructor's row holds at every representable DAG vector."""
        if table.p > 4:
            return
        vectors = dag_vectors(table)
        rows = []
        nodes = range(table.p)
        for size in range(2, table.p + 1):
            for c in combinations(nodes, size):
                rows += [cluster_inequality(c, table), knapsack_form(c, table),
                         set_packing_inequality(c, table)]
        for quad in combinations(nodes, 4):
            for v2, v3 in combinations(quad, 2):
                v1, v4 = [u for u in quad if u not in (v2, v3)]
                rows.append(convex4b_inequality(v1, v2, v3, v4, table))
            for a in quad:
                rows.append(chvatal2_inequality(a, set(quad) - {a}, table))
        bad = sum(1 for row in rows if any(row.violation(vec) > 1e-9 for vec in vectors))
        self._record("inequality_validity", bad == 0,
                     f"{len(rows)} rows over {len(vectors)} DAGs, {bad} invalid")

    # -- learner agreement ------------------------------------------

    def check_instance(self, table: ScoreTable, label: str = "instance"):
        _, dp_score = dp_best(table)
        result = branch_and_cut(build_ip(table, set_packing=self.params.set_packing), self.params)
        ok = result.status == SolveStatus.OPTIMAL and abs(result.best_score - dp_score) <= SCORE_TOL
        self._record(f"{label}_optimum", ok,
                     f"branch-and-cut {result.best_score:.6f} ({result.status.value}), dp {dp_score:.6f}")

        if table.p <= 5:
            ranked = exhaustive_best(table)
            ok = abs(ranked[0][1] - dp_score) <= SCORE_TOL
            self._record(f"{label}_oracles", ok, f"exhaustive {ranked[0][1]:.6f}, dp {dp_score:.6f}")

            k = min(3, len(ranked))
            kbest = solve_kbest(build_ip(table), k, self.params)
            got = [r.best_score for r in kbest]
            want = [s for _, s in ranked[:k]]
            ok = len(got) == len(want) and all(abs(a - b) <= SCORE_TOL for a, b in zip(got, want))
            self._record(f"{label}_kbest", ok,
                         f"got {[round(s, 6) for s in got]}, expected {[round(s, 6) for s in want]}")

        if table.p <= 4:
            self.check_inequality_validity(table)
            audited = branch_and_cut(build_ip(table), self.params.model_copy(update={"audit": True}))
            violations = audited.stats.audit_violations
            self._record(f"{label}_cut_validity", not violations,
                         f"{audited.stats.audit_checks} cuts audited, {len(violations)} invalid")

    def check_corpus(self):
        gen = InstanceGenerator(self.seed)
        failures = 0
        for trial in range(self.trials):
            p = int(gen.rng.integers(3, 7))
            kind = InstanceKind.DENSE if trial % 2 else InstanceKind.STRUCTURED
            full = gen.score_table(InstanceConfig(p=p, palim=3, prune=False, kind=kind))
            pruned = ScoreTable(full.names, [prune_dominated(c) for c in full.candidates], full.palim)
            _, full_score = dp_best(full)
            _, pruned_score = dp_best(pruned)
            if abs(full_score - pruned_score) > 1e-9:
                failures += 1
            before = len(self.findings)
            self.check_instance(pruned, label=f"trial{trial}")
            if any(not f.passed for f in self.findings[before:]):
                logger.warning("Trial %d (p=%d, %s) failed", trial, p, kind.value)
        self._record("pruning_safety", failures == 0, f"{failures} of {self.trials} trials changed the optimum")

        points_bad = 0
        eq_bad = 0
        for _ in range(self.trials * 5):
            p = int(gen.rng.integers(3, 7))
            table = gen.score_table(InstanceConfig(p=p, palim=2, prune=False))
            x = gen.convex_point(table)
            fast = find_cluster_cuts(x, table)
            slow = find_cluster_cuts_bruteforce(x, table)
            if bool(fast) != bool(slow) or (fast and abs(fast[0].violation - slow[0].violation) > 1e-9):
                points_bad += 1
            for size in range(2, min(p, 5) + 1):
                for c in combinations(range(p), size):
                    v4 = cluster_inequality(c, table).violation(x)
                    v5 = knapsack_form(c, table).violation(x)
                    if abs(v4 - v5) > 1e-12:
                        eq_bad += 1
        self._record("separation_completeness", points_bad == 0,
                     f"{points_bad} of {self.trials * 5} points disagree with brute force")
        self._record("knapsack_equivalence", eq_bad == 0, f"{eq_bad} cluster forms disagree")

    # -- report -----------------------------------------------------

    @property
    def all_passed(self) -> bool:
        return all(f.passed for f in self.findings)

    def report(self) -> str:
        lines = [f"{'PASS' if f.passed else 'FAIL'} {f.check}: {f.detail}" for f in self.findings]
        failed = sum(1 for f in self.findings if not f.passed)
        lines.append(f"{len(self.findings) - failed} passed, {failed} failed")
        return "\n".join(lines) + "\n"
