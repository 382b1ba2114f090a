"""Greedy sink-finding rounding of LP points."""

import numpy as np
import pytest

from bnsl.instances import InstanceConfig, InstanceGenerator, three_node_half_point
from bnsl.network import Network
from bnsl.oracle import dp_best
from bnsl.sink_heuristic import SinkState, sink_find

from conftest import chain_vector, make_table


def test_optimal_integral_point_comes_back_unchanged():
    gen = InstanceGenerator(77)
    for _ in range(30):
        p = int(gen.rng.integers(3, 7))
        table = gen.score_table(InstanceConfig(p=p, palim=3))
        best, _ = dp_best(table)
        found = sink_find(best.family_vector(table), table)
        assert found is not None
        assert found.parents == best.parents
        assert found.score == pytest.approx(best.score)


def test_committing_a_sink_retires_parent_sets_containing_it():
    table = make_table({
        0: {(2,): -1.0, (): -2.0},
        1: {(0,): -1.0, (2,): -1.5, (): -3.0},
        2: {(): -1.0},
        3: {(0, 2): -1.0, (2,): -1.5, (): -2.0},
    })
    state = SinkState.initial(table, {})
    state.commit(2)
    assert state.best(0) == table.family_id(0, ())
    assert state.best(1) == table.family_id(1, (0,))
    assert list(state.ok(1)) == [table.family_id(1, (0,)), table.family_id(1, ())]
    assert list(state.ok(3)) == [table.family_id(3, ())]
    assert state.remaining == [0, 1, 3]


def test_first_pick_cost_uses_best_candidate_mass(complete3):
    state = SinkState.initial(complete3, {})
    x = chain_vector(complete3, {})
    # complete3 scores are all zero, so the empty set sorts first for every node
    assert state.cost(0, x) == 0.0
    assert state.destroyed(0, x) == 0.0


def test_half_point_rounds_to_an_acyclic_network(half_table):
    y = three_node_half_point(half_table)
    net = sink_find(y, half_table)
    assert net is not None
    assert net.is_acyclic()
    assert net.score <= dp_best(half_table)[1] + 1e-9


def test_fixings_are_respected():
    table = InstanceGenerator(5).score_table(InstanceConfig(p=4, palim=2, prune=False))
    forced = table.family_id(0, (1,))
    banned = int(table.node_ids(2)[0])
    x = chain_vector(table, {0: (1,)})
    net = sink_find(x, table, {forced: 1, banned: 0})
    assert net is not None
    assert net.parents[0] == frozenset({1})
    assert net.family_ids(table)[2] != banned
    assert net.is_acyclic()


def test_conflicting_fixings_abort(complete3):
    fix = {complete3.family_id(0, (1,)): 1, complete3.family_id(1, (0,)): 1}
    x = chain_vector(complete3, {0: (1,), 1: (0,)})
    assert sink_find(x, complete3, fix) is None


def test_two_ones_for_one_node_abort(complete3):
    fix = {complete3.family_id(0, ()): 1, complete3.family_id(0, (1,)): 1}
    assert sink_find(np.zeros(complete3.n), complete3, fix) is None


def test_result_is_deterministic():
    gen = InstanceGenerator(3)
    table = gen.score_table(InstanceConfig(p=6, palim=2, prune=False))
    x = gen.convex_point(table)
    first = sink_find(x, table)
    assert first is not None and first.is_acyclic()
    assert sink_find(x, table) == first
    assert first == Network.from_families([table.families[i] for i in first.family_ids(table)])
