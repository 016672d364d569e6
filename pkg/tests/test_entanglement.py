import math

import numpy as np
import pytest

from xxzlab.clusters import distance_at_most
from xxzlab.hamiltonian import ModelParams, chain_full, config_to_index
from xxzlab.entanglement import (MixedSectorState, chain_window, completion_distance_histogram,
                                 decompose_state, entanglement_entropy, extremal_candidate,
                                 in_window, log_c_alpha, partial_trace_oracle,
                                 reduced_density_matrix, renyi_entropy, sample_subspace_states,
                                 theorem6_rhs, trace_alpha_bound_rhs, trace_alpha_bound_rhs_sampled,
                                 trace_power, unnormalized_reduced, von_neumann_entropy,
                                 window_basis)
from xxzlab.spectral import chain_decay_constants

INF = math.inf
ALPHAS = (0.1, 0.3, 0.5, 0.7, 0.9)


def random_state(L, rng, density=0.5):
    configs, amps = [], []
    for i in range(2 ** L):
        if rng.random() < density:
            configs.append(tuple(j for j in range(1, L + 1) if i >> (L - j) & 1))
            amps.append(rng.standard_normal() + 1j * rng.standard_normal())
    amps = np.array(amps)
    return MixedSectorState.from_arrays(configs, amps / np.linalg.norm(amps))


# -- states -------------------------------------------------------------------------

def test_state_validation():
    with pytest.raises(ValueError, match="normalized"):
        MixedSectorState({(1,): 0.5})
    with pytest.raises(ValueError, match="repeated"):
        MixedSectorState({(1, 2): 0.6, (2, 1): 0.8})
    psi = MixedSectorState({(): 0.6, (2,): 0.8j})
    assert psi.weights == {0: pytest.approx(0.6), 1: pytest.approx(0.8)}
    assert psi.components[1][(2,)] == pytest.approx(1j)


def test_from_sectors_roundtrip():
    v = np.array([0.6, 0.8])
    psi = MixedSectorState.from_sectors({1: (math.sqrt(0.5), [(1,), (2,)], v),
                                         2: (math.sqrt(0.5), [(1, 2)], np.array([1.0]))})
    assert abs(psi.norm() - 1) < 1e-12
    np.testing.assert_allclose(list(psi.components[1].values()), v)
    with pytest.raises(ValueError):
        MixedSectorState.from_sectors({1: (1.0, [(1, 2)], np.array([1.0]))})


def test_to_dense_uses_site_one_as_high_bit():
    psi = MixedSectorState({(1,): 1.0})
    v = psi.to_dense(3)
    assert v[0b100] == 1 and config_to_index((1,), 3) == 0b100


# -- reduced states --------------------------------------------------------------------

def test_reduced_product_state():
    red = reduced_density_matrix(MixedSectorState({(2, 5): 1.0}), 3, 6)
    assert red.labels == [(2,)]
    np.testing.assert_allclose(red.matrix, [[1.0]])
    assert von_neumann_entropy(red) == 0


def test_reduced_schmidt_pair():
    ell, L = 3, 6
    psi = MixedSectorState({(1,): 1 / math.sqrt(2), (ell + 1,): 1 / math.sqrt(2)})
    red = reduced_density_matrix(psi, ell, L)
    assert sorted(red.labels) == [(), (1,)]
    np.testing.assert_allclose(red.matrix, np.eye(2) / 2, atol=1e-15)
    assert math.isclose(von_neumann_entropy(red), math.log(2))


def test_reduced_m_pairs():
    ell, L, M = 4, 10, 5
    lefts = [(1,), (2,), (3,), (1, 2), (2, 4)]
    rights = [(5,), (6,), (7, 8), (9,), (10,)]
    psi = MixedSectorState.uniform([Y + Z for Y, Z in zip(lefts, rights)])
    lam = reduced_density_matrix(psi, ell, L).spectrum()
    np.testing.assert_allclose(lam, np.full(M, 1 / M), atol=1e-14)


def test_reduced_errors():
    psi = MixedSectorState({(1,): 1.0})
    with pytest.raises(ValueError):
        reduced_density_matrix(psi, 0, 4)
    with pytest.raises(ValueError):
        reduced_density_matrix(psi, 4, 4)
    with pytest.raises(ValueError):
        reduced_density_matrix(MixedSectorState({(1,): 0.5}, strict=False), 2, 4)
    with pytest.raises(ValueError):
        reduced_density_matrix(MixedSectorState({(7,): 1.0}), 2, 4)


@pytest.mark.parametrize("L", [2, 5, 8, 10])
def test_reduced_matches_dense_oracle(L):
    rng = np.random.default_rng(L)
    for _ in range(3):
        psi = random_state(L, rng, density=0.4 if L > 5 else 0.8)
        for ell in range(1, L):
            red = reduced_density_matrix(psi, ell, L)
            oracle = partial_trace_oracle(psi.to_dense(L), ell, L)
            np.testing.assert_allclose(red.dense(ell), oracle, atol=1e-10)
            rho = red.matrix
            np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
            assert np.linalg.eigvalsh(rho).min() > -1e-10
            assert abs(red.trace() - 1) < 1e-10


def test_long_chain_path_matches_mask_path():
    # shift a short state far to the right: the spectrum is translation invariant
    rng = np.random.default_rng(4)
    psi = random_state(9, rng, 0.5)
    shift = 70
    far = MixedSectorState.from_arrays([tuple(x + shift for x in X) for X in psi.configs], psi.amps)
    a = reduced_density_matrix(psi, 4, 9)
    b = reduced_density_matrix(far, 4 + shift, 9 + shift)
    np.testing.assert_allclose(a.spectrum(), b.spectrum(), atol=1e-12)
    assert [tuple(y + shift for y in Y) for Y in a.labels] == b.labels
    assert abs(b.trace() - 1) < 1e-12
    # a long-chain sparse factor densifies to the same matrix up to the relabelling
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(b.matrix)), np.sort(a.spectrum()), atol=1e-12)


# -- entropies -----------------------------------------------------------------------

def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0
    for n in (1, 3, 7):
        rho = np.eye(n) / n
        assert math.isclose(von_neumann_entropy(rho), math.log(n), abs_tol=1e-14)
        for a in ALPHAS:
            assert math.isclose(renyi_entropy(rho, a), math.log(n), abs_tol=1e-12)
    expected = 0.75 * math.log(4 / 3) + 0.25 * math.log(4)
    assert math.isclose(von_neumann_entropy(np.diag([0.75, 0.25])), expected)
    assert math.isclose(trace_power(np.diag([0.75, 0.25]), 0.5), math.sqrt(0.75) + 0.5)


def test_entropy_errors():
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([1.1, -0.1]))
    for a in (0, 1, 1.5):
        with pytest.raises(ValueError):
            renyi_entropy(np.eye(2) / 2, a)


def test_renyi_dominates_von_neumann():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        rho = G @ G.conj().T
        rho /= np.trace(rho).real
        S = von_neumann_entropy(rho)
        assert S <= math.log(n) + 1e-12
        for a in ALPHAS:
            assert S <= renyi_entropy(rho, a) + 1e-12


def test_entropy_bounded_by_log_rank():
    rng = np.random.default_rng(2)
    for _ in range(10):
        red = reduced_density_matrix(random_state(8, rng, 0.3), 4, 8)
        rank = int((red.spectrum() > 1e-14).sum())
        assert von_neumann_entropy(red) <= math.log(rank) + 1e-12


# -- decomposition ------------------------------------------------------------------------

def test_decompose_examples():
    psi = MixedSectorState({(1,): 0.6, (1, 2): 0.8})
    Psi, hat = decompose_state(psi, 2, 5)
    assert hat.norm() == 0 and abs(Psi.norm() - 1) < 1e-15
    Psi, hat = decompose_state(MixedSectorState({(3,): 1.0}), 2, 5)
    assert Psi.norm() == 0 and hat.norm() == 1


@pytest.mark.parametrize("seed", range(5))
def test_decompose_reconstruction(seed):
    rng = np.random.default_rng(seed)
    L, ell = 8, 3
    psi = random_state(L, rng, 0.4)
    Psi, hat = decompose_state(psi, ell, L)
    assert abs(Psi.norm() ** 2 + hat.norm() ** 2 - 1) < 1e-12
    # Psi lives in the left half only: its reduced state is the pure projector
    u = np.zeros(2 ** ell, dtype=complex)
    for X, a in Psi.amplitudes.items():
        u[config_to_index(X, ell)] = a
    rho = reduced_density_matrix(psi, ell, L).dense(ell)
    rho_hat = unnormalized_reduced(hat, ell, L).dense(ell)
    np.testing.assert_allclose(rho, np.outer(u, u.conj()) + rho_hat, atol=1e-10)


# -- bounds ----------------------------------------------------------------------------

def test_completion_histogram_matches_direct():
    from itertools import combinations
    ell, K = 5, 1
    hist = dict(completion_distance_histogram(ell, K))
    assert sum(hist.values()) == 2 ** ell - 2
    direct = {}
    for j in range(1, ell):
        for Y in combinations(range(1, ell + 1), j):
            d = distance_at_most(Y + (ell + 1,), K)
            direct[d] = direct.get(d, 0) + 1
    assert hist == direct
    with pytest.raises(ValueError):
        completion_distance_histogram(19, 1)


def test_trace_bound_examples():
    for ell in (3, 5, 6):
        for K in (1, 2):
            assert trace_alpha_bound_rhs(None, 0.5, K, 0.5, 2.0, ell, 12) >= 6
    # K so large that every completion is already a K-cluster configuration: all distances 0
    ell, K = 5, 5
    assert dict(completion_distance_histogram(ell, K)) == {0: 2 ** ell - 2}
    C3, _ = chain_decay_constants(K, 0.5, 2.0)
    rhs = trace_alpha_bound_rhs(None, 0.5, K, 0.5, ModelParams(2.0), ell, 12)
    assert math.isclose(rhs, 6 + 2 * C3 * (2 ** ell - 2))
    with pytest.raises(ValueError):
        trace_alpha_bound_rhs(None, 1.0, 1, 0.5, 2.0, 5, 12)


def test_sampled_bound_is_near_exact():
    exact = trace_alpha_bound_rhs(None, 0.5, 1, 0.5, 2.0, 10, 20)
    est = trace_alpha_bound_rhs_sampled(0.5, 1, 0.5, 2.0, 10, 20000, seed=1)
    assert abs(est - exact) / exact < 0.05


def test_log_c_alpha():
    assert log_c_alpha(INF) == 0
    g = 0.3
    direct = -2 * sum(math.log1p(-math.exp(-g * j)) for j in range(1, 2000))
    assert math.isclose(log_c_alpha(g), direct, rel_tol=1e-12)


def test_renyi_bound_rhs_properties():
    for K in (1, 2, 3):
        vals = [theorem6_rhs(0.5, K, ell, 0.5, 2.0) for ell in (1, 2, 5, 10, 100, 10 ** 4)]
        assert all(v > 0 and math.isfinite(v) for v in vals)
        assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        theorem6_rhs(1.0, 1, 5, 0.5, 2.0)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_renyi_bound_rhs_log_slope(K):
    # the additive constant is large, so the slope (not the raw ratio) carries the coefficient
    a, b = 10 ** 6, 10 ** 7
    slope = (theorem6_rhs(0.5, K, b, 0.5, 2.0) - theorem6_rhs(0.5, K, a, 0.5, 2.0)) / math.log(b / a)
    assert abs(slope / ((2 * K - 1) / 0.5) - 1) < 0.1


def test_renyi_bound_rhs_raw_ratio_at_1e6():
    # reported, not a coefficient check: the raw ratio rhs / log(ell) at ell = 1e6 stays
    # above the slope because of the log C_3 offset
    for K in (1, 2, 3):
        r = theorem6_rhs(0.5, K, 10 ** 6, 0.5, 2.0) / math.log(10 ** 6)
        assert r > (2 * K - 1) / 0.5


# -- window sampling ----------------------------------------------------------------------

def _window(L, K, delta, aniso=2.0, V=None):
    p = ModelParams.chain_field(aniso, V) if V is not None else ModelParams(aniso)
    return chain_window(chain_full(L, p), K, delta)


def test_samples_lie_in_window_and_are_deterministic():
    w = _window(8, 1, 0.5)
    states = sample_subspace_states(w, 20, seed=3)
    assert len(states) == 21
    for psi in states:
        assert abs(psi.norm() - 1) < 1e-12
        assert in_window(psi, w) < 1e-10
    again = sample_subspace_states(w, 20, seed=3)
    assert all(np.array_equal(a.amps, b.amps) for a, b in zip(states, again))
    other = sample_subspace_states(w, 20, seed=4)
    assert not np.allclose(states[1].amps, other[1].amps)


def test_rank_one_window():
    # only the vacuum lies below 0.1
    w = window_basis(chain_full(6, ModelParams(2.0)), 0.1)
    assert w.rank == 1
    psi = sample_subspace_states(w, 1, seed=0)[1]
    assert psi.configs == [()] and abs(abs(psi.amps[0]) - 1) < 1e-12
    assert extremal_candidate(w).configs == [()]


def test_empty_window_rejected():
    w = window_basis(chain_full(4, ModelParams(2.0)), -1.0)
    with pytest.raises(ValueError, match="empty"):
        sample_subspace_states(w, 3, seed=0)


@pytest.mark.parametrize("K", [1, 2])
def test_bounds_hold_on_window_samples(K):
    L, delta, aniso = 10, 0.5, 2.0
    w = _window(L, K, delta, aniso)
    for psi in sample_subspace_states(w, 40, seed=11):
        for ell in (3, 5):
            red = reduced_density_matrix(psi, ell, L)
            S = von_neumann_entropy(red)
            for a in (0.1, 0.5, 0.9):
                tp = trace_power(red, a)
                assert tp <= trace_alpha_bound_rhs(psi, a, K, delta, aniso, ell, L) + 1e-9
                assert renyi_entropy(red, a) <= theorem6_rhs(a, K, ell, delta, aniso) + 1e-9
                assert S <= renyi_entropy(red, a) + 1e-12


def test_entanglement_entropy_shortcut():
    psi = MixedSectorState({(1,): 1 / math.sqrt(2), (4,): 1 / math.sqrt(2)})
    assert math.isclose(entanglement_entropy(psi, 2, 5), math.log(2))
