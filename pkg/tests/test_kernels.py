"""Both kernel backends must agree bit for bit."""
import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import small_model
from treebest import kernels
from treebest.diverse import DiversitySpec, admissible_sets
from treebest.dpcore import map_solve

NP = kernels.get_backend("numpy")
NB = kernels.get_backend("numba")


def same(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert x.dtype == y.dtype
        np.testing.assert_array_equal(x, y)


def topo(m):
    p = m.packed
    return p.unary, p.pair, p.parent, p.order, p.child_ptr, p.child_idx


@pytest.mark.parametrize("seed", range(12))
def test_map_pass(seed):
    m = small_model(seed, (1, 40))
    same(NP.map_pass(*topo(m)), NB.map_pass(*topo(m)))


@pytest.mark.parametrize("seed", range(12))
def test_layer_step(seed):
    m = small_model(seed, (1, 40))
    E, msg, _ = NP.map_pass(*topo(m))
    allowed = np.random.default_rng(seed).random(E.shape) < 0.6
    args = topo(m) + (E, msg, allowed, 1)
    a = NP.layer_step(*args)
    same(a, NB.layer_step(*args))
    # a second layer on top of the first
    args2 = topo(m) + (a[0], msg, ~allowed, 2)
    same(NP.layer_step(*args2), NB.layer_step(*args2))


@pytest.mark.parametrize("seed", range(12))
def test_accumulate_pass(seed):
    m = small_model(seed, (1, 40))
    rng = np.random.default_rng(seed)
    n, L = m.packed.unary.shape
    node = rng.integers(0, 2, (2, n, L)).astype(float)
    edge = rng.integers(0, 2, (2, n, L, L)).astype(float) * 0.5
    args = topo(m) + (node, edge)
    same(NP.accumulate_pass(*args), NB.accumulate_pass(*args))


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("k", [2, 4])
def test_klayer_step(seed, k):
    m = small_model(seed, (2, 40))
    p = m.packed
    n, L = p.unary.shape
    E, msg, _ = NP.map_pass(*topo(m))
    allowed = np.random.default_rng(seed).random(E.shape) < 0.7
    for be in (NP, NB):
        msgs = np.full((k + 1, n, L), np.inf)
        msgs[0] = msg
        prev, jumped, outs = E, np.zeros((n, L), bool), []
        for layer in range(1, k + 1):
            out = be.klayer_step(*topo(m), prev, jumped, msgs, allowed, layer)
            msgs[layer] = out[1]
            prev, jumped = out[0], out[3]
            outs.append(out)
        if be is NP:
            ref = outs
        else:
            for a, b in zip(ref, outs):
                same(a, b)


@pytest.mark.parametrize("seed", range(6))
def test_trace(seed):
    m = small_model(seed, (2, 30))
    p = m.packed
    n, L = p.unary.shape
    rng = np.random.default_rng(seed)
    arg = rng.integers(0, 2, (3, n, L))
    jump = rng.random((3, n, L)) < 0.3
    jump[0] = False
    src = rng.integers(0, 3, (3, n, L))
    src[0] = 0
    for layer in range(3):
        a = NP.trace(arg, jump, src, p.parent, p.order, layer, 1)
        b = NB.trace(arg, jump, src, p.parent, p.order, layer, 1)
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("seed", range(8))
def test_naive_mbest(seed):
    m = small_model(seed, (1, 30))
    for M in (1, 4, 9):
        a = NP.naive_mbest(*topo(m), m.root, M)
        b = NB.naive_mbest(*topo(m), m.root, M)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1:] == b[1:]


def test_numba_tie_breaks_match_numpy_on_integer_tables():
    # integer potentials create many exact ties
    rng = np.random.default_rng(7)
    from treebest.model import TreeModel

    for _ in range(10):
        m = small_model(int(rng.integers(1 << 30)), (3, 25))
        m = TreeModel(
            m.label_counts, m.root, m.edges,
            tuple(np.floor(u * 3) for u in m.unary), tuple(np.floor(t * 3) for t in m.pairwise),
        )
        same(NP.map_pass(*topo(m)), NB.map_pass(*topo(m)))
        best = map_solve(m).best
        spec = DiversitySpec.hamming(best, 2, m.label_counts)
        node, edge = spec.packed(m)
        same(NP.accumulate_pass(*topo(m), node[None], edge[None]), NB.accumulate_pass(*topo(m), node[None], edge[None]))


def brute_combine(mm, need):
    """Minimum over the enumerated admissible sets (1-based layers)."""
    d, layers, L = mm.shape
    best = np.full(L, np.inf)
    for adm in admissible_sets(d, need + 1):
        if any(l - 1 >= layers for l in adm.layers):
            continue
        total = sum(mm[i, l - 1] for i, l in enumerate(adm.layers))
        best = np.minimum(best, total)
    return best


@pytest.mark.parametrize("seed", range(25))
def test_combine_matches_admissible_enumeration(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    need = int(rng.integers(1, 4))
    L = int(rng.integers(1, 4))
    mm = rng.random((d, need + 1, L))
    mm[rng.random(mm.shape) < 0.2] = np.inf
    for be in (NP, NB):
        total, choice = be.combine_admissible(mm, need)
        np.testing.assert_allclose(total, brute_combine(mm, need), rtol=0, atol=1e-12)
        for s in range(L):
            if total[s] < np.inf:
                # the witness is admissible and attains the minimum
                assert choice[:, s].sum() >= need
                assert sum(mm[i, choice[i, s], s] for i in range(d)) == pytest.approx(total[s], abs=1e-12)
    same(NP.combine_admissible(mm, need), NB.combine_admissible(mm, need))


def test_admissible_sets_definition():
    for d, target in itertools.product(range(1, 4), range(1, 5)):
        sets = admissible_sets(d, target)
        expect = [c for c in itertools.product(range(1, target + 1), repeat=d) if sum(c) - d >= target - 1]
        assert [a.layers for a in sets] == expect
        assert all(1 <= l <= target for a in sets for l in a.layers)
        assert all(a.jumps >= target - 1 for a in sets)


def test_backend_flag():
    out = subprocess.run(
        [sys.executable, "-c", "from treebest import kernels; print(kernels.BACKEND)"],
        env={**os.environ, "TREEBEST_NUMBA": "0"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
    with pytest.raises(ValueError):
        kernels.get_backend("cuda")
