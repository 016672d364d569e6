import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxzlab.clusters import cluster_count
from xxzlab.graphs import InducedSubgraph, chain, Graph, strip
from xxzlab.hamiltonian import (ISING_PHASE_MSG, ModelParams, build_full, build_sector,
                                chain_full, chain_sector, config_to_index, full_spectrum,
                                index_to_config, ising_eigensystem, sector_threshold,
                                tensor_oracle, threshold_energy)

INF = math.inf


def test_params_reject_non_ising_phase():
    for bad in (0.5, 1.0, -3.0, float("nan")):
        with pytest.raises(ValueError, match=ISING_PHASE_MSG):
            ModelParams(bad)
    with pytest.raises(ValueError, match="non-negative"):
        ModelParams(2.0, {1: -0.1})


def test_params_derived():
    p = ModelParams(2.0)
    assert p.g == 0.25 and p.beta == 0.25
    q = ModelParams(INF)
    assert q.g == 0.0 and q.beta == 0.5


def test_threshold_energy_examples():
    assert threshold_energy(1, 2.0) == 0.5
    assert threshold_energy(3, INF) == 3
    assert threshold_energy(0, 2.0) == 0
    # chain: E_(N,k) with k = 2(K-1) is E_K
    for K in (1, 2, 3):
        for d in (1.5, 2.0, INF):
            assert math.isclose(sector_threshold(2 * (K - 1), d), threshold_energy(K, d))


def test_two_site_sector_by_hand():
    s = chain_sector(2, 1, ModelParams(2.0))
    np.testing.assert_allclose(s.matrix, [[0.75, -0.25], [-0.25, 0.75]])
    np.testing.assert_allclose(np.linalg.eigvalsh(s.matrix), [0.5, 1.0])


def test_build_full_two_sites():
    sectors = chain_full(2, ModelParams(2.0))
    assert [s.dim for s in sectors] == [1, 2, 1]
    ev = full_spectrum(sectors)
    assert len(ev) == 4 and ev[0] == 0
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(tensor_oracle(2, ModelParams(2.0))), atol=1e-12)


def test_N0_sector_is_zero():
    s = build_sector(chain(4), 0, ModelParams(3.0))
    assert s.matrix.shape == (1, 1) and s.matrix[0, 0] == 0


def test_sector_out_of_range():
    with pytest.raises(ValueError):
        build_sector(chain(3), 4, ModelParams(2.0))


def test_ising_limit_sector_is_diagonal_cluster_count():
    s = chain_sector(7, 3, ModelParams(INF))
    assert np.count_nonzero(s.matrix - np.diag(np.diag(s.matrix))) == 0
    assert np.array_equal(np.diag(s.matrix), [cluster_count(X) for X in s.configs])


def test_interior_droplet_diagonal_is_E1():
    for d in (1.5, 2.0, 5.0):
        s = chain_sector(8, 3, ModelParams(d))
        i = s.configs.index((3, 4, 5))
        # internal hopping degree 2: 2 g + beta * 2
        assert math.isclose(s.matrix[i, i], 2 * s.params.g + 2 * s.params.beta)
        assert math.isclose(s.matrix[i, i] - 2 * s.params.g, threshold_energy(1, d))


def test_sector_structure():
    p = ModelParams(2.0, {2: 0.3, 5: 0.1})
    s = chain_sector(6, 3, p)
    H = s.matrix
    assert np.array_equal(H, H.T)
    for i, X in enumerate(s.configs):
        diag = p.g * s.degree_sub[i] + p.beta * s.degree_full[i] + sum(p.V(x) for x in X)
        assert math.isclose(H[i, i], diag)
        for j, Y in enumerate(s.configs):
            if i != j:
                adjacent = len(set(X) ^ set(Y)) == 2 and abs(np.diff(sorted(set(X) ^ set(Y))))[0] == 1
                assert H[i, j] == (-p.g if adjacent else 0.0)


def test_assumption_violation_detected():
    g = Graph.from_edges([(x, x + 1) for x in range(0, 6)], frontier=(0, 6), kind="chain")
    with pytest.raises(ValueError, match="A1"):
        build_sector(InducedSubgraph(g, (1, 3)), 1, ModelParams(2.0))


def test_tensor_oracle_basics():
    H = tensor_oracle(3, ModelParams(2.0))
    assert H.shape == (8, 8)
    assert H[0, 0] == 0  # all spins up
    np.testing.assert_allclose(np.linalg.eigvalsh(tensor_oracle(5, ModelParams(INF))) % 1, 0, atol=1e-12)
    with pytest.raises(ValueError):
        tensor_oracle(13, ModelParams(2.0))


def test_config_index_roundtrip():
    for i in range(2 ** 6):
        assert config_to_index(index_to_config(i, 6), 6) == i


@pytest.mark.parametrize("L", [2, 3, 5, 7])
@pytest.mark.parametrize("delta", [1.5, 2.0, 5.0, INF])
def test_oracle_equivalence(L, delta):
    rng = np.random.default_rng(L * 100 + (0 if math.isinf(delta) else int(delta * 10)))
    p = ModelParams.chain_field(delta, rng.random(L))
    ev = full_spectrum(chain_full(L, p))
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(tensor_oracle(L, p)), atol=1e-10)


def test_oracle_equivalence_entrywise():
    # same basis order after relabelling: the matrices agree entry by entry
    L, p = 5, ModelParams.chain_field(3.0, [0.1, 0.0, 0.4, 0.2, 0.3])
    T = tensor_oracle(L, p)
    for s in chain_full(L, p):
        idx = [config_to_index(X, L) for X in s.configs]
        np.testing.assert_allclose(s.matrix, T[np.ix_(idx, idx)], atol=1e-14)


def test_ising_eigensystem_examples():
    es = dict(ising_eigensystem(8))
    assert es[()] == 0
    assert es[(2, 3, 7)] == 2
    es = dict(ising_eigensystem(6, [j / 10 for j in range(1, 7)]))
    assert math.isclose(es[(1, 4)], 2.5)
    with pytest.raises(ValueError):
        ising_eigensystem(3, [0.1, -1, 0])


def test_ising_eigensystem_matches_spectrum():
    V = [0.3, 0.0, 0.7, 0.1, 0.2, 0.9]
    ev = full_spectrum(chain_full(6, ModelParams.chain_field(INF, V)))
    np.testing.assert_allclose(ev, np.sort([e for _, e in ising_eigensystem(6, V)]), atol=1e-12)


@pytest.mark.parametrize("delta", [1.5, 3.0, INF])
def test_ground_state_and_gap(delta):
    p = ModelParams.chain_field(delta, np.linspace(0, 0.5, 7))
    ev = full_spectrum(chain_full(7, p))
    assert ev[0] == 0 and np.count_nonzero(np.abs(ev) < 1e-9) == 1
    assert ev[1] >= 0.5 * (1 - (0 if math.isinf(delta) else 1 / delta)) - 1e-9


@pytest.mark.parametrize("delta", [1.5, 2.0, INF])
def test_block_positivity(delta):
    for N in (2, 3, 4):
        s = chain_sector(8, N, ModelParams(delta))
        for k in (0, 1, 2, 4):
            cut = np.flatnonzero(s.degree_full >= s.d_min + k)
            if len(cut) == 0:
                continue
            lam = np.linalg.eigvalsh(s.matrix[np.ix_(cut, cut)])[0]
            assert lam >= sector_threshold(k, delta, s.d_min) - 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 2), min_size=6, max_size=6), st.lists(st.floats(0, 1), min_size=6, max_size=6))
def test_monotone_in_field(V, W):
    base = ModelParams.chain_field(2.0, V)
    more = ModelParams.chain_field(2.0, [a + b for a, b in zip(V, W)])
    for N in (1, 2, 3):
        a = np.linalg.eigvalsh(chain_sector(6, N, base).matrix)
        b = np.linalg.eigvalsh(chain_sector(6, N, more).matrix)
        assert np.all(b >= a - 1e-10)


def test_workers_give_identical_sectors():
    p = ModelParams.chain_field(2.0, np.linspace(0, 1, 8))
    a = build_full(chain(8), p, workers=1)
    b = build_full(chain(8), p, workers=4)
    for x, y in zip(a, b):
        assert x.N == y.N and np.array_equal(x.matrix, y.matrix)


def test_strip_host_sectors_are_positive():
    sub = strip(2, 2, pad=1)
    sectors = build_full(sub, ModelParams(2.0), check=False)
    assert full_spectrum(sectors)[0] > -1e-12
