"""Cluster, 4B and Gomory cut finders."""

from itertools import combinations

import pytest

from bnsl.instances import InstanceConfig, InstanceGenerator, four_node_half_point, three_node_half_point
from bnsl.ip_model import RowTag, Sense, build_ip, cluster_inequality
from bnsl.lp_simplex import solve_lp
from bnsl.oracle import dag_vectors
from bnsl.separation import (
    ClusterSubIp,
    find_cluster_cuts,
    find_cluster_cuts_bruteforce,
    find_convex4b_cuts,
    find_gomory_cuts,
)

from conftest import chain_vector, make_table


class TestClusterCuts:
    def test_two_cycle(self, complete3):
        x = chain_vector(complete3, {0: (1,), 1: (0,)})
        cuts = find_cluster_cuts(x, complete3)
        assert [c.cluster for c in cuts] == [frozenset({0, 1})]
        assert cuts[0].violation == pytest.approx(1.0)
        assert cuts[0].source == RowTag.CLUSTER

    def test_three_cycle_only_full_cluster(self, complete3):
        x = chain_vector(complete3, {0: (2,), 1: (0,), 2: (1,)})
        for finder in (find_cluster_cuts, find_cluster_cuts_bruteforce):
            cuts = finder(x, complete3)
            assert [c.cluster for c in cuts] == [frozenset({0, 1, 2})]

    def test_empty_graph(self, complete4):
        assert find_cluster_cuts(chain_vector(complete4, {}), complete4) == []

    def test_half_point_satisfies_all_clusters(self, complete3):
        y = three_node_half_point(complete3)
        assert find_cluster_cuts(y, complete3) == []
        assert find_cluster_cuts_bruteforce(y, complete3) == []

    def test_registry_suppresses_known_clusters(self, complete3):
        x = chain_vector(complete3, {0: (1,), 1: (0,)})
        assert find_cluster_cuts(x, complete3, registry={frozenset({0, 1})}) == []

    def test_subip_objective_is_violation_minus_one(self, complete4):
        x = chain_vector(complete4, {0: (1,), 1: (2,), 2: (0,), 3: (2,)})
        cuts = find_cluster_cuts(x, complete4)
        assert cuts
        for cut in cuts:
            assert cut.subip_objective == pytest.approx(cut.violation - 1.0, abs=1e-12)

    def test_dense_and_sparse_sub_ip_agree(self):
        gen = InstanceGenerator(8)
        table = gen.score_table(InstanceConfig(p=5, palim=2, prune=False))
        x = gen.convex_point(table, density=0.3)
        sparse = ClusterSubIp(x, table, sparse=True)
        dense = ClusterSubIp(x, table, sparse=False)
        assert dense.n_jvars >= sparse.n_jvars
        assert {n for n, _ in sparse.solve()} == {n for n, _ in dense.solve()}

    def test_limit_keeps_best_violations(self):
        gen = InstanceGenerator(12)
        table = gen.score_table(InstanceConfig(p=6, palim=2, prune=False))
        x = gen.convex_point(table, density=0.8)
        every = find_cluster_cuts_bruteforce(x, table)
        few = find_cluster_cuts(x, table, limit=3)
        assert len(few) == min(3, len(every))
        if every:
            assert few[0].violation == pytest.approx(every[0].violation, abs=1e-9)

    def test_agrees_with_brute_force_on_random_points(self):
        gen = InstanceGenerator(606)
        for _ in range(200):
            p = int(gen.rng.integers(3, 7))
            table = gen.score_table(InstanceConfig(p=p, palim=int(gen.rng.integers(1, 4)), prune=False))
            x = gen.convex_point(table, density=float(gen.rng.uniform(0.1, 0.9)))
            fast = find_cluster_cuts(x, table)
            slow = find_cluster_cuts_bruteforce(x, table)
            assert bool(fast) == bool(slow)
            if fast:
                assert fast[0].violation == pytest.approx(slow[0].violation, abs=1e-9)


class TestConvex4bCuts:
    def test_four_node_half_point(self, complete4):
        z = four_node_half_point(complete4)
        cuts = find_convex4b_cuts(z, complete4)
        assert cuts
        assert cuts[0].violation == pytest.approx(0.5, abs=1e-12)
        assert any(c.inequality.scope == (0, 1, 2, 3) and c.violation == pytest.approx(0.5) for c in cuts)
        assert all(c.source == RowTag.CONVEX4B for c in cuts)

    def test_no_cut_at_any_dag(self, complete4):
        for vec in dag_vectors(complete4):
            assert find_convex4b_cuts(vec, complete4) == []

    def test_three_nodes_have_no_4b_rows(self, complete3):
        assert find_convex4b_cuts(three_node_half_point(complete3), complete3) == []


class TestGomoryCuts:
    def test_integral_solution_gives_nothing(self):
        sol = solve_lp(build_ip(make_table({0: {(): -0.5}})))
        assert find_gomory_cuts(sol, build_ip(make_table({0: {(): -0.5}}))) == []

    def test_cuts_from_the_half_point_are_valid(self, half_table):
        pairs = [cluster_inequality(c, half_table) for c in combinations(range(3), 2)]
        model = build_ip(half_table, set_packing=False).extended(pairs)
        sol = solve_lp(model)
        assert not sol.is_integral()
        cuts = find_gomory_cuts(sol, model)
        assert cuts
        vectors = dag_vectors(half_table)
        for cut in cuts:
            assert cut.source == RowTag.GOMORY
            assert cut.inequality.sense == Sense.GE
            assert cut.violation > 1e-6
            assert not cut.inequality.is_satisfied(sol.values)
            assert all(cut.inequality.violation(vec) <= 1e-9 for vec in vectors)

    def test_cuts_hold_under_the_fixings_they_were_derived_with(self, half_table):
        pairs = [cluster_inequality(c, half_table) for c in combinations(range(3), 2)]
        model = build_ip(half_table, set_packing=False).extended(pairs)
        var = half_table.family_id(0, (1,))
        sol = solve_lp(model, fix={var: 0})
        assert sol.fractional_ids().size > 0
        vectors = dag_vectors(half_table)
        vectors = vectors[vectors[:, var] == 0]
        cuts = find_gomory_cuts(sol, model)
        assert cuts
        for cut in cuts:
            assert all(cut.inequality.violation(vec) <= 1e-9 for vec in vectors)
