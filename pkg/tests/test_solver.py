"""Branch-and-cut search, propagation, k-best enumeration and cut audits."""

import numpy as np
import pytest

from bnsl.config import SolverParams
from bnsl.formats import EdgeConstraint
from bnsl.instances import InstanceGenerator, InstanceKind
from bnsl.ip_model import build_ip, exclusion_constraint
from bnsl.network import Network
from bnsl.oracle import dag_vectors, dp_best, exhaustive_best
from bnsl.sink_heuristic import sink_find
from bnsl.solver import (
    SolveResult,
    SolverStats,
    SolveStatus,
    branch_and_cut,
    propagate,
    select_branch_var,
    solve_kbest,
)

from conftest import make_table


def two_node_table():
    return make_table({0: {(): -1.0, (1,): -0.5}, 1: {(): -1.0, (0,): -0.5}})


class TestPropagation:
    def test_one_family_then_no_cycle(self):
        table = two_node_table()
        chosen = table.family_id(0, (1,))
        fix, added = propagate({chosen: 1}, table)
        assert fix == {
            chosen: 1,
            table.family_id(0, ()): 0,
            table.family_id(1, (0,)): 0,
            table.family_id(1, ()): 1,
        }
        assert added == 3

    def test_last_survivor_is_forced(self, complete3):
        ids = list(complete3.node_ids(2))
        fix, _ = propagate({i: 0 for i in ids[:-1]}, complete3)
        assert fix[ids[-1]] == 1

    @pytest.mark.parametrize("fixing", ["cycle", "two_ones", "no_candidate"])
    def test_conflicts(self, fixing):
        table = two_node_table()
        if fixing == "cycle":
            fix = {table.family_id(0, (1,)): 1, table.family_id(1, (0,)): 1}
        elif fixing == "two_ones":
            fix = {table.family_id(0, (1,)): 1, table.family_id(0, ()): 1}
        else:
            fix = {i: 0 for i in table.node_ids(1)}
        assert propagate(fix, table) is None

    def test_never_excludes_the_constrained_optimum(self):
        gen = InstanceGenerator(404)
        for _ in range(25):
            p = int(gen.rng.integers(3, 6))
            table = gen.corpus(1, (p, p), palim=2)[0]
            vectors = dag_vectors(table)
            scores = vectors @ table.scores()
            fix = {}
            for var in gen.rng.choice(table.n, size=min(3, table.n), replace=False):
                fix[int(var)] = int(gen.rng.integers(0, 2))
            match = np.all([vectors[:, i] == v for i, v in fix.items()], axis=0)
            closed = propagate(fix, table)
            if closed is None:
                assert not match.any()
                continue
            full, _ = closed
            kept = np.all([vectors[:, i] == v for i, v in full.items()], axis=0)
            assert kept.any() == match.any()
            if match.any():
                assert scores[kept].max() == pytest.approx(scores[match].max(), abs=1e-12)


class TestBranchVariable:
    def test_single_fractional(self):
        assert select_branch_var(np.array([1.0, 0.0, 0.25]), np.zeros(3)) == 2

    def test_most_fractional_wins(self):
        assert select_branch_var(np.array([0.3, 0.5, 0.0]), np.zeros(3)) == 1

    def test_objective_breaks_ties(self):
        assert select_branch_var(np.array([0.5, 0.5]), np.array([-2.0, -1.0])) == 1

    def test_integral_point_rejected(self):
        with pytest.raises(ValueError):
            select_branch_var(np.array([1.0, 0.0]), np.zeros(2))


class TestBranchAndCut:
    def test_single_node(self):
        result = branch_and_cut(build_ip(make_table({0: {(): -0.5}})))
        assert result.status == SolveStatus.OPTIMAL
        assert result.best_score == -0.5
        assert result.stats.max_depth == 0
        assert result.gap == 0.0

    def test_matches_dp_on_small_corpus(self):
        for table in InstanceGenerator(10).corpus(15, (3, 6)):
            result = branch_and_cut(build_ip(table))
            assert result.status == SolveStatus.OPTIMAL
            assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)
            assert result.best.is_acyclic()
            assert result.upper_bound == pytest.approx(result.best_score)

    @pytest.mark.slow
    def test_matches_dp_on_hundred_instances(self):
        for table in InstanceGenerator(2025).corpus(100, (3, 8)):
            result = branch_and_cut(build_ip(table))
            assert result.status == SolveStatus.OPTIMAL
            assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)

    def test_dense_corpus_branches_and_matches_dp(self):
        nodes = []
        for table in InstanceGenerator(31).corpus(12, (4, 6), kind=InstanceKind.DENSE):
            result = branch_and_cut(build_ip(table))
            assert result.status == SolveStatus.OPTIMAL
            assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)
            nodes.append(result.stats.nodes)
        assert max(nodes) > 1

    @pytest.mark.slow
    def test_matches_dp_on_hundred_dense_instances(self):
        branched = 0
        for table in InstanceGenerator(2025).corpus(100, (3, 8), kind=InstanceKind.DENSE):
            result = branch_and_cut(build_ip(table))
            assert result.status == SolveStatus.OPTIMAL
            assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)
            branched += result.stats.nodes > 1
        assert branched > 0

    @pytest.mark.parametrize("toggles", [
        {"set_packing": False},
        {"sink_heuristic": False},
        {"propagation": False},
        {"gomory": False},
        {"convex4b": True},
        {"static_convex4b": True},
        {"set_packing": False, "gomory": False, "sink_heuristic": False},
    ])
    def test_feature_toggles_do_not_change_the_optimum(self, toggles):
        params = SolverParams(**toggles)
        for table in InstanceGenerator(55).corpus(6, (4, 6)):
            model = build_ip(table, set_packing=params.set_packing, static_convex4b=params.static_convex4b)
            result = branch_and_cut(model, params)
            assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)

    @pytest.mark.parametrize("kind", [InstanceKind.STRUCTURED, InstanceKind.DENSE])
    def test_integral_lp_points_survive_the_sink_heuristic(self, kind):
        seen = []
        for table in InstanceGenerator(10).corpus(15, (3, 6), kind=kind):
            def check(sol, point, fix, table=table):
                found = sink_find(point, table, fix)
                seen.append(found is not None and found.parents == Network.from_vector(point, table).parents)
            branch_and_cut(build_ip(table), SolverParams(sink_heuristic=False), on_integral=check)
        assert seen and all(seen)

    def test_node_limit_reports_an_honest_bound(self):
        table = InstanceGenerator(8).corpus(1, (8, 8))[0]
        result = branch_and_cut(build_ip(table), SolverParams(node_limit=1))
        assert result.best is not None
        assert result.upper_bound >= result.best_score - 1e-9
        assert result.upper_bound >= dp_best(table)[1] - 1e-6
        if result.status == SolveStatus.FEASIBLE_TIMEOUT:
            expected = (result.upper_bound - result.best_score) / abs(result.best_score)
            assert result.gap == pytest.approx(expected)

    def test_gap_formula(self):
        net = Network((frozenset(),), -10.0)
        result = SolveResult(net, -10.0, -9.0, SolveStatus.FEASIBLE_TIMEOUT, SolverStats())
        assert result.gap == pytest.approx(0.1)

    def test_excluding_the_only_network_is_infeasible(self):
        table = make_table({0: {(): -0.5}})
        only = Network((frozenset(),), -0.5)
        model = build_ip(table).extended([exclusion_constraint(only, table)])
        result = branch_and_cut(model)
        assert result.status == SolveStatus.INFEASIBLE
        assert result.best is None

    @pytest.mark.parametrize("required", [True, False])
    def test_edge_constraints_match_filtered_exhaustive_ranking(self, required):
        table = InstanceGenerator(17).corpus(1, (4, 4), palim=3, prune=False)[0]
        model = build_ip(table, constraints=[EdgeConstraint(0, 1, required)])
        result = branch_and_cut(model)
        ranked = [s for net, s in exhaustive_best(table) if (0 in net.parents[1]) == required]
        assert result.best_score == pytest.approx(ranked[0], abs=1e-6)
        assert (0 in result.best.parents[1]) == required

    def test_stats_are_reported(self):
        table = InstanceGenerator(10).corpus(1, (6, 6))[0]
        stats = branch_and_cut(build_ip(table)).stats.as_dict()
        assert stats["nodes"] >= 1
        assert stats["lp_solves"] >= stats["nodes"]
        assert set(stats) >= {"cuts", "heuristic_calls", "propagation_fixings", "elapsed"}


class TestAudit:
    def test_cuts_are_valid_on_four_node_instances(self):
        params = SolverParams(audit=True, convex4b=True)
        for table in InstanceGenerator(44).corpus(8, (4, 4)):
            result = branch_and_cut(build_ip(table), params)
            assert result.stats.audit_violations == []
            assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)

    @pytest.mark.slow
    def test_cuts_are_valid_on_the_oracle_corpus(self):
        params = SolverParams(audit=True)
        for table in InstanceGenerator(2025).corpus(100, (3, 8)):
            if table.p != 4:
                continue
            result = branch_and_cut(build_ip(table), params)
            assert result.stats.audit_violations == []

    def test_every_cut_family_is_audited_on_dense_instances(self):
        cuts = {"cluster": 0, "gomory": 0, "convex4B": 0}
        for table in InstanceGenerator(77).corpus(40, (4, 4), kind=InstanceKind.DENSE):
            for set_packing in (True, False):
                params = SolverParams(audit=True, convex4b=True, set_packing=set_packing)
                result = branch_and_cut(build_ip(table, set_packing=set_packing), params)
                assert result.stats.audit_violations == []
                assert result.best_score == pytest.approx(dp_best(table)[1], abs=1e-6)
                for source in cuts:
                    cuts[source] += result.stats.cuts.get(source, 0)
        assert all(count > 0 for count in cuts.values()), cuts

    @pytest.mark.slow
    def test_cuts_are_valid_on_the_dense_oracle_corpus(self):
        params = SolverParams(audit=True, convex4b=True)
        for table in InstanceGenerator(2025).corpus(100, (3, 8), kind=InstanceKind.DENSE):
            if table.p != 4:
                continue
            result = branch_and_cut(build_ip(table), params)
            assert result.stats.audit_violations == []


class TestKBest:
    def test_k1_is_branch_and_cut(self):
        table = InstanceGenerator(6).corpus(1, (5, 5))[0]
        model = build_ip(table)
        (first,) = solve_kbest(model, 1)
        assert first.best_score == pytest.approx(branch_and_cut(model).best_score, abs=1e-9)

    def test_top_three_match_exhaustive_ranking(self):
        for table in InstanceGenerator(303).corpus(5, (4, 4), prune=False):
            results = solve_kbest(build_ip(table), 3)
            ranked = exhaustive_best(table)[:3]
            assert [r.best_score for r in results] == pytest.approx([s for _, s in ranked], abs=1e-9)
            assert [r.best.parents for r in results] == [net.parents for net, _ in ranked]

    @pytest.mark.slow
    def test_top_three_on_twenty_instances(self):
        for table in InstanceGenerator(909).corpus(20, (4, 4)):
            results = solve_kbest(build_ip(table), 3)
            ranked = exhaustive_best(table)[:3]
            assert [r.best_score for r in results] == pytest.approx([s for _, s in ranked], abs=1e-9)
            assert [r.best.parents for r in results] == [net.parents for net, _ in ranked]

    def test_sequence_stops_when_networks_run_out(self):
        table = make_table({0: {(): -1.0, (1,): -0.5}, 1: {(): -1.0}})
        results = solve_kbest(build_ip(table), 5)
        assert [r.best_score for r in results] == [-1.5, -2.0]

    def test_limit_without_a_network_is_kept(self):
        results = solve_kbest(build_ip(two_node_table()), 3, SolverParams(time_limit=1e-9))
        assert len(results) == 1
        assert results[0].status == SolveStatus.FEASIBLE_TIMEOUT
        assert results[0].best is None
        assert results[0].gap == float("inf")

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            solve_kbest(build_ip(two_node_table()), 0)


@pytest.mark.slow
def test_packing_rows_reduce_search_effort():
    with_rows, without_rows = [], []
    for table in InstanceGenerator(12).corpus(10, (5, 7), kind=InstanceKind.DENSE):
        on = branch_and_cut(build_ip(table, set_packing=True), SolverParams(set_packing=True))
        off = branch_and_cut(build_ip(table, set_packing=False), SolverParams(set_packing=False))
        assert on.best_score == pytest.approx(off.best_score, abs=1e-6)
        with_rows.append(on.stats.nodes)
        without_rows.append(off.stats.nodes)
    counts = f"with rows {with_rows}, without rows {without_rows}"
    assert sum(without_rows) >= sum(with_rows), counts
    more = sum(b > a for a, b in zip(with_rows, without_rows))
    fewer = sum(b < a for a, b in zip(with_rows, without_rows))
    assert more >= fewer, counts
