"""Shared fixtures for the BNSL test-suite."""

from typing import Dict, Iterable, Tuple

import numpy as np
import pytest

from bnsl.instances import InstanceGenerator
from bnsl.oracle import complete_table
from bnsl.scoring import CandidateFamily, ScoreTable


def make_table(scores: Dict[int, Dict[Tuple[int, ...], float]], names: Iterable[str] = None) -> ScoreTable:
    """ScoreTable from {child: {parents tuple: score}}."""
    p = len(scores)
    names = list(names) if names is not None else [str(v) for v in range(p)]
    candidates = [[CandidateFamily(v, frozenset(ps), s) for ps, s in scores[v].items()] for v in range(p)]
    return ScoreTable(names, candidates)


def half_point_scores(v, parents) -> float:
    """Empty set 0, one parent -5, two parents +1: mutual parenthood looks attractive."""
    return {0: 0.0, 1: -5.0, 2: 1.0}[len(parents)]


def chain_vector(table: ScoreTable, parents: Dict[int, Tuple[int, ...]]) -> np.ndarray:
    """0/1 family vector choosing the given parents (empty for unlisted nodes)."""
    x = np.zeros(table.n)
    for v in range(table.p):
        x[table.family_id(v, parents.get(v, ()))] = 1.0
    return x


@pytest.fixture
def complete3() -> ScoreTable:
    return complete_table(3)


@pytest.fixture
def complete4() -> ScoreTable:
    return complete_table(4)


@pytest.fixture
def half_table() -> ScoreTable:
    return complete_table(3, score=half_point_scores)


@pytest.fixture
def generator() -> InstanceGenerator:
    return InstanceGenerator(seed=1234)


@pytest.fixture
def three_node_scores() -> str:
    """Hand-made score file; the optimum is A <- {B}, B <- {C}, C <- {} at -26."""
    return (
        "3\n"
        "A 3\n-10.0 0\n-8.0 1 B\n-9.5 2 B C\n"
        "B 2\n-12.0 0\n-11.0 1 C\n"
        "C 2\n-7.0 0\n-7.5 1 A\n"
    )
