import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TOL, single_node, term_sum, tree_models, zero_chain
from treebest.dpcore import map_solve
from treebest.generate import random_model
from treebest.model import InvalidModelError, Labeling
from treebest.oracle import StateSpaceTooLarge, best_with_min_distance, enumerate_best, hamming


def test_single_node_sorted():
    assert [l.energy for l in enumerate_best(single_node([0.1, 0.7, 0.3]), 3)] == pytest.approx([0.1, 0.3, 0.7])


def test_more_than_state_space():
    m = zero_chain(3)
    sols = enumerate_best(m, 100)
    assert len(sols) == 8
    # equal energies keep lexicographic order
    assert [s.assignment for s in sols] == list(itertools.product(range(2), repeat=3))


def test_cap():
    m = zero_chain(12, 4)
    with pytest.raises(StateSpaceTooLarge):
        enumerate_best(m, 1)
    with pytest.raises(StateSpaceTooLarge):
        best_with_min_distance(m, [], 1)
    small = zero_chain(3)
    with pytest.raises(StateSpaceTooLarge):
        enumerate_best(small, 1, cap=7)
    assert len(enumerate_best(small, 2, cap=8)) == 2


def test_energies_by_term_sum(rng):
    m = random_model(rng, 5, [2, 3, 2, 2, 3], 0.0, 1.0)
    for lab in enumerate_best(m, 10):
        assert lab.energy == pytest.approx(term_sum(m, lab.assignment), abs=1e-12)
    energies = [l.energy for l in enumerate_best(m, m.state_space_size)]
    assert energies == sorted(energies)


@given(tree_models(max_nodes=5))
@settings(max_examples=50, deadline=None)
def test_head_is_map(m):
    assert enumerate_best(m, 1)[0].energy == pytest.approx(map_solve(m).best.energy, abs=TOL)


@given(tree_models(max_nodes=5))
@settings(max_examples=50, deadline=None)
def test_min_distance_one_is_second_best(m):
    if m.state_space_size < 2:
        return
    best = enumerate_best(m, 1)
    found = best_with_min_distance(m, best, 1)
    assert found.energy == pytest.approx(enumerate_best(m, 2)[1].energy, abs=TOL)


def test_min_distance_zero_is_head(rng):
    m = random_model(rng, 5, 3, 0.0, 1.0)
    head = enumerate_best(m, 1)[0]
    assert best_with_min_distance(m, [head], 0) == head


def test_forced_complement():
    m = zero_chain(3)
    found = best_with_min_distance(m, [Labeling((0, 0, 0), 0.0)], 3)
    assert found.assignment == (1, 1, 1) and found.energy == 0.0


def test_unreachable_distance():
    m = zero_chain(3)
    assert best_with_min_distance(m, [Labeling((0, 0, 0), 0.0)], 4) is None


def test_hamming():
    assert hamming((0, 1, 2), (0, 1, 2)) == 0
    assert hamming(Labeling((0,) * 6, 0.0), Labeling((1,) * 6, 0.0)) == 6
    with pytest.raises(InvalidModelError):
        hamming((0, 1), (0, 1, 0))


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=12))
def test_hamming_symmetric(pairs):
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    assert hamming(a, b) == hamming(b, a) == sum(x != y for x, y in pairs)
