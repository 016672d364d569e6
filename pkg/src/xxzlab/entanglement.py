"""Bipartite reduced states of sparse configuration-basis vectors, entropies and
the area-law bounds for the chain.

The chain ``[1, L]`` is split into ``[1, ell]`` and ``[ell+1, L]``.  A state is a
map configuration -> amplitude; configurations are converted to bit masks with
site ``j`` on bit ``L - j`` so the left factor is the high part of the mask.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .clusters import distance_at_most
from .graphs import as_config
from .hamiltonian import SectorOperator, check_delta, threshold_energy
from .spectral import SpectralData, chain_decay_constants, decay_factor, eigendecompose

ZERO_EIG = 1e-14
NORM_TOL = 1e-9
MAX_EXHAUSTIVE_ELL = 18
MAX_MASK_BITS = 62


@lru_cache(maxsize=1 << 20)
def _mask(X: tuple, L: int) -> int:
    return sum(1 << (L - j) for j in X)


def config_mask(X: Iterable[int], L: int) -> int:
    if isinstance(X, tuple):
        return _mask(X, L)
    return sum(1 << (L - j) for j in X)


def mask_config(mask: int, L: int, offset: int = 0) -> tuple:
    return tuple(j + offset for j in range(1, L + 1) if mask >> (L - j) & 1)


class MixedSectorState:
    """Vector ``sum_N a_N psi_N`` stored as parallel lists of configurations and amplitudes.

    ``weights[N] = a_N`` (taken real and non-negative) and ``components[N] = psi_N``
    (unit norm) are derived views.  ``strict`` enforces overall unit norm.
    """

    def __init__(self, amplitudes: Mapping[tuple, complex], strict: bool = True):
        items = [(as_config(X), complex(a)) for X, a in amplitudes.items() if a != 0]
        configs = [X for X, _ in items]
        if len(set(configs)) != len(configs):
            raise ValueError("repeated configuration")
        self._set(configs, np.array([a for _, a in items], dtype=complex), strict)

    def _set(self, configs, amps, strict):
        self.configs = configs
        self.amps = amps
        self._masks: dict = {}
        if strict and abs(self.norm() - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {self.norm():.12g})")

    @classmethod
    def from_arrays(cls, configs: Sequence[tuple], amps: np.ndarray, strict: bool = True) -> "MixedSectorState":
        """Fast constructor; ``configs`` must be distinct sorted tuples."""
        obj = cls.__new__(cls)
        amps = np.asarray(amps, dtype=complex)
        keep = amps != 0
        obj._set([X for X, k in zip(configs, keep) if k], amps[keep], strict)
        return obj

    @classmethod
    def from_sectors(cls, parts: Mapping[int, tuple[float, Sequence[tuple], np.ndarray]]) -> "MixedSectorState":
        """``parts[N] = (a_N, configs, unit vector)``."""
        configs, amps = [], []
        for N, (a, cfgs, vec) in parts.items():
            vec = np.asarray(vec)
            if abs(np.linalg.norm(vec) - 1) > NORM_TOL:
                raise ValueError(f"component N={N} is not a unit vector")
            for X, c in zip(cfgs, vec):
                if len(X) != N:
                    raise ValueError(f"configuration {X} does not have {N} particles")
                configs.append(as_config(X))
                amps.append(a * c)
        return cls.from_arrays(configs, np.array(amps))

    @classmethod
    def uniform(cls, configs: Iterable[Sequence[int]]) -> "MixedSectorState":
        cfgs = sorted({as_config(X) for X in configs}, key=lambda X: (len(X), X))
        if not cfgs:
            raise ValueError("need at least one configuration")
        return cls.from_arrays(cfgs, np.full(len(cfgs), 1 / math.sqrt(len(cfgs))))

    @property
    def amplitudes(self) -> dict:
        return dict(zip(self.configs, self.amps))

    def masks(self, L: int) -> np.ndarray:
        if L not in self._masks:
            if any(X and (X[0] < 1 or X[-1] > L) for X in self.configs):
                raise ValueError(f"configuration outside [1, {L}]")
            self._masks[L] = np.fromiter((config_mask(X, L) for X in self.configs),
                                         dtype=np.int64, count=len(self.configs))
        return self._masks[L]

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def normalized(self) -> "MixedSectorState":
        n = self.norm()
        if n == 0:
            raise ValueError("zero vector")
        out = MixedSectorState.from_arrays(self.configs, self.amps / n)
        if np.all(self.amps != 0):
            out._masks = self._masks  # same configurations, share the cache
        return out

    def select(self, keep: np.ndarray) -> "MixedSectorState":
        """Unnormalized sub-vector on the configurations flagged by ``keep``."""
        return MixedSectorState.from_arrays([X for X, k in zip(self.configs, keep) if k],
                                            self.amps[keep], strict=False)

    @property
    def weights(self) -> dict[int, float]:
        w: dict[int, float] = {}
        for X, a in zip(self.configs, self.amps):
            w[len(X)] = w.get(len(X), 0.0) + abs(a) ** 2
        return {N: math.sqrt(v) for N, v in sorted(w.items())}

    @property
    def components(self) -> dict[int, dict]:
        w = self.weights
        out: dict[int, dict] = {N: {} for N in w}
        for X, a in zip(self.configs, self.amps):
            out[len(X)][X] = a / w[len(X)]
        return out

    def to_dense(self, L: int) -> np.ndarray:
        v = np.zeros(2 ** L, dtype=complex)
        v[self.masks(L)] = self.amps
        return v

    def __len__(self):
        return len(self.configs)


@dataclass
class ReducedState:
    """``rho_1 = M M^dagger`` restricted to the left configurations that occur.

    ``labels[i]`` is the subset of ``[1, ell]`` of row ``i``; ``factor`` is ``M``,
    a dense array or (for long chains) a scipy sparse matrix.
    """

    labels: list
    factor: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def matrix(self) -> np.ndarray:
        M = self.factor.toarray() if sp.issparse(self.factor) else self.factor
        return M @ M.conj().T

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of ``rho_1`` (from the singular values of ``M``), descending."""
        if self._spectrum is None:
            if min(self.factor.shape) == 0:
                self._spectrum = np.zeros(0)
            elif sp.issparse(self.factor):
                self._spectrum = _sparse_spectrum(self.factor)
            else:
                self._spectrum = np.linalg.svd(self.factor, compute_uv=False) ** 2
        return self._spectrum

    def trace(self) -> float:
        M = self.factor
        data = M.data if sp.issparse(M) else M
        return float(np.vdot(data, data).real)

    def dense(self, ell: int) -> np.ndarray:
        """Full ``2^ell x 2^ell`` matrix in the bit-mask basis."""
        idx = [config_mask(Y, ell) for Y in self.labels]
        out = np.zeros((2 ** ell, 2 ** ell), dtype=complex)
        out[np.ix_(idx, idx)] = self.matrix
        return out


def _sparse_spectrum(M) -> np.ndarray:
    # rows and columns split into blocks that share no entries; SVD per block
    M = sp.csr_matrix(M)
    m, n = M.shape
    B = (M != 0).astype(np.int8)
    graph = sp.bmat([[None, B], [B.T, None]], format="csr")
    ncomp, lab = connected_components(graph, directed=False)
    rows, cols = lab[:m], lab[m:]
    nr = np.bincount(rows, minlength=ncomp)
    nc = np.bincount(cols, minlength=ncomp)
    # 1 x 1 blocks: the squared modulus of the single entry
    single = (nr == 1) & (nc == 1)
    C = M.tocoo()
    hit = single[rows[C.row]]
    out = [np.abs(C.data[hit]) ** 2]
    r_groups = np.split(np.argsort(rows, kind="stable"), np.cumsum(nr)[:-1])
    c_groups = np.split(np.argsort(cols, kind="stable"), np.cumsum(nc)[:-1])
    for c in np.flatnonzero(~single & (nr > 0) & (nc > 0)):
        r, k = r_groups[c], c_groups[c]
        out.append(np.linalg.svd(M[r][:, k].toarray(), compute_uv=False) ** 2)
    return np.sort(np.concatenate(out))[::-1] if out else np.zeros(0)


def _check_cut(ell: int, L: int):
    if not 1 <= ell < L:
        raise ValueError(f"need 1 <= ell < L, got ell={ell}, L={L}")


def reduced_density_matrix(psi: MixedSectorState, ell: int, L: int) -> ReducedState:
    """Partial trace over ``[ell+1, L]`` without forming the ``2^L`` vector."""
    _check_cut(ell, L)
    if abs(psi.norm() - 1) > NORM_TOL:
        raise ValueError("state is not normalized")
    if not len(psi):
        return ReducedState([], np.zeros((0, 0)))
    if L > MAX_MASK_BITS:
        return _reduced_by_tuples(psi, ell, L)
    masks, amps = psi.masks(L), psi.amps
    shift = L - ell
    ykeys, yi = np.unique(masks >> shift, return_inverse=True)
    zkeys, zi = np.unique(masks & ((1 << shift) - 1), return_inverse=True)
    M = sp.coo_matrix((amps, (yi, zi)), shape=(len(ykeys), len(zkeys))).toarray()
    return ReducedState([mask_config(int(k), ell) for k in ykeys], M)


def _mask_order(X: tuple, L: int) -> tuple:
    # sorts like config_mask(X, L) without building the integer
    return tuple(-x for x in X) + (-(L + 1),)


def _reduced_by_tuples(psi: MixedSectorState, ell: int, L: int) -> ReducedState:
    # chains too long for int64 masks: factorize the two halves as tuples
    if any(X and (X[0] < 1 or X[-1] > L) for X in psi.configs):
        raise ValueError(f"configuration outside [1, {L}]")
    lefts, rights = [], []
    for X in psi.configs:
        cut = bisect_right(X, ell)
        lefts.append(X[:cut])
        rights.append(X[cut:])
    ykeys = sorted(set(lefts), key=lambda Y: _mask_order(Y, ell))
    zkeys = sorted(set(rights), key=lambda Z: _mask_order(Z, L))
    yi = {Y: i for i, Y in enumerate(ykeys)}
    zi = {Z: i for i, Z in enumerate(zkeys)}
    M = sp.csr_matrix((psi.amps, ([yi[Y] for Y in lefts], [zi[Z] for Z in rights])),
                      shape=(len(ykeys), len(zkeys)))
    return ReducedState(ykeys, M)


def partial_trace_oracle(vec: np.ndarray, ell: int, L: int) -> np.ndarray:
    """Dense partial trace of a ``2^L`` vector (site 1 most significant)."""
    _check_cut(ell, L)
    P = np.asarray(vec, dtype=complex).reshape(2 ** ell, 2 ** (L - ell))
    return P @ P.conj().T


def _eigs(rho) -> np.ndarray:
    if isinstance(rho, ReducedState):
        lam = rho.spectrum()
    else:
        lam = np.linalg.eigvalsh(np.asarray(rho))
    if lam.size and lam.min() < -NORM_TOL:
        raise ValueError(f"negative eigenvalue {lam.min():.3g}")
    return lam[lam > ZERO_EIG]


def von_neumann_entropy(rho) -> float:
    """``-Tr rho log rho`` (natural log); eigenvalues below 1e-14 count as 0."""
    lam = _eigs(rho)
    return float(-(lam * np.log(lam)).sum())


def trace_power(rho, alpha: float) -> float:
    """``Tr rho^alpha``."""
    return float((_eigs(rho) ** alpha).sum())


def renyi_entropy(rho, alpha: float) -> float:
    """``log(Tr rho^alpha) / (1 - alpha)`` for ``0 < alpha < 1``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.log(trace_power(rho, alpha)) / (1 - alpha)


def entanglement_entropy(psi: MixedSectorState, ell: int, L: int) -> float:
    return von_neumann_entropy(reduced_density_matrix(psi, ell, L))


def decompose_state(psi: MixedSectorState, ell: int, L: int) -> tuple[MixedSectorState, MixedSectorState]:
    """Split into the part with no particle right of ``ell`` and the rest.

    Neither part is normalized.
    """
    _check_cut(ell, L)
    if abs(psi.norm() - 1) > NORM_TOL:
        raise ValueError("state is not normalized")
    right = np.array([bool(X) and X[-1] > ell for X in psi.configs], dtype=bool)
    return psi.select(~right), psi.select(right)


def unnormalized_reduced(psi: MixedSectorState, ell: int, L: int) -> ReducedState:
    """Partial trace of a vector of any norm."""
    n = psi.norm()
    if n == 0:
        return ReducedState([], np.zeros((0, 0)))
    red = reduced_density_matrix(psi.normalized(), ell, L)
    return ReducedState(red.labels, red.factor * n)


# -- bounds ------------------------------------------------------------------------

@lru_cache(maxsize=None)
def completion_distance_histogram(ell: int, K: int) -> tuple:
    """Counts of ``d(Y u {ell+1}, V_{|Y|+1,K})`` over ``Y`` in ``[1, ell]``, ``1 <= |Y| <= ell-1``.

    Returned as sorted ``(distance, count)`` pairs.
    """
    if ell > MAX_EXHAUSTIVE_ELL:
        raise ValueError(f"exhaustive sum limited to ell <= {MAX_EXHAUSTIVE_ELL}")
    hist: Counter = Counter()
    for j in range(1, ell):
        for Y in combinations(range(1, ell + 1), j):
            hist[distance_at_most(Y + (ell + 1,), K)] += 1
    return tuple(sorted(hist.items()))


def _gamma(alpha: float, K: int, delta: float, aniso: float):
    C3, mu3 = chain_decay_constants(K, delta, aniso)
    return C3, 2 * alpha * mu3


def trace_alpha_bound_rhs(psi, alpha: float, K: int, delta: float, params, ell: int, L: int) -> float:
    """``6 + 2 sum_j sum_{|Y|=j} C_3 exp(-2 alpha mu_3 d(Y u {ell+1}, V_{j+1,K}))``.

    The value does not depend on ``psi``, which is accepted (and may be None)
    only to mirror the statement it bounds.  ``params`` is a ``ModelParams`` or
    the anisotropy itself.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    _check_cut(ell, L)
    aniso = check_delta(getattr(params, "delta", params))
    C3, gamma = _gamma(alpha, K, delta, aniso)
    hist = completion_distance_histogram(ell, K)
    d = np.array([h[0] for h in hist], dtype=float)
    n = np.array([h[1] for h in hist], dtype=float)
    return float(6 + 2 * C3 * (n * decay_factor(gamma, d)).sum())


def trace_alpha_bound_rhs_sampled(alpha: float, K: int, delta: float, aniso: float, ell: int,
                                  samples: int, seed: int) -> float:
    """Monte-Carlo estimate of the same sum for ``ell`` beyond the exhaustive cap.

    Not a bound: an unbiased estimate of one, reported for orientation only.
    """
    C3, gamma = _gamma(alpha, K, delta, check_delta(aniso))
    rng = np.random.default_rng(seed)
    total = 2.0 ** ell - 2
    acc = 0.0
    for _ in range(samples):
        while True:
            bits = rng.integers(0, 2, ell)
            if 0 < bits.sum() < ell:
                break
        Y = tuple(int(i) + 1 for i in np.flatnonzero(bits))
        acc += float(decay_factor(gamma, distance_at_most(Y + (ell + 1,), K)))
    return 6 + 2 * C3 * total * acc / samples


def log_c_alpha(gamma: float, tol: float = 1e-15) -> float:
    """``log prod_j (1 - e^{-gamma j})^{-2}``, stopped once ``e^{-gamma j} < tol``."""
    if math.isinf(gamma):
        return 0.0
    out, j = 0.0, 1
    while True:
        q = math.exp(-gamma * j)
        if q < tol:
            return out
        out -= 2 * math.log1p(-q)
        j += 1


def theorem6_rhs(alpha: float, K: int, ell: int, delta: float, delta_aniso: float) -> float:
    """``log(2 C_3 K C(alpha)^K / (1 - e^{-2 alpha mu_3}) ell^{2K-1} + 6) / (1 - alpha)``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if K < 1 or delta <= 0 or ell < 1:
        raise ValueError("need K >= 1, delta > 0, ell >= 1")
    C3, gamma = _gamma(alpha, K, delta, check_delta(delta_aniso))
    log_den = 0.0 if math.isinf(gamma) else math.log(-math.expm1(-gamma))
    log_a = math.log(2 * C3 * K) + K * log_c_alpha(gamma) - log_den + (2 * K - 1) * math.log(ell)
    return float(np.logaddexp(log_a, math.log(6))) / (1 - alpha)


# -- sampling the spectral window --------------------------------------------------

@dataclass
class WindowBasis:
    """Orthonormal bases of ``chi_[0, E](H)`` per particle number."""

    parts: list  # (N, configs, U) with U of shape (dim_N, rank_N)
    configs: list = field(init=False)
    mask_cache: dict = field(init=False)

    @property
    def rank(self) -> int:
        return sum(U.shape[1] for _, _, U in self.parts)

    def __post_init__(self):
        self.configs = [X for _, configs, _ in self.parts for X in configs]
        self.mask_cache: dict = {}

    def projector(self, N: int) -> np.ndarray:
        for n, _, U in self.parts:
            if n == N:
                return U @ U.T
        raise KeyError(N)


def window_basis(sectors: Sequence[SectorOperator], E_top: float,
                 spectra: Sequence[SpectralData] | None = None) -> WindowBasis:
    """Eigenvectors with eigenvalue in ``[0, E_top]`` for every sector."""
    spectra = spectra or [eigendecompose(s) for s in sectors]
    parts = []
    for s, spec in zip(sectors, spectra):
        U = spec.window(0.0, E_top) if E_top >= 0 else spec.eigenvectors[:, :0]
        if U.shape[1]:
            parts.append((s.N, s.configs, U))
    return WindowBasis(parts)


def chain_window(sectors: Sequence[SectorOperator], K: int, delta: float,
                 spectra: Sequence[SpectralData] | None = None) -> WindowBasis:
    """Window below the ``(K+1)``-cluster break-up: ``[0, E_{K+1} - delta]``."""
    E_top = threshold_energy(K + 1, sectors[0].params.delta) - delta
    return window_basis(sectors, E_top, spectra)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for sample ``index``; depends only on ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def extremal_candidate(window: WindowBasis) -> MixedSectorState:
    """Normalized sum of all window eigenvectors."""
    amps = np.concatenate([U.sum(axis=1) for _, _, U in window.parts])
    return MixedSectorState.from_arrays(window.configs, amps, strict=False).normalized()


def sample_state(window: WindowBasis, seed: int, index: int) -> MixedSectorState:
    """Complex Gaussian vector projected onto the window and normalized."""
    rng = sample_rng(seed, index)
    parts = []
    for _, _, U in window.parts:
        g = (rng.standard_normal(U.shape[0]) + 1j * rng.standard_normal(U.shape[0])) / math.sqrt(2)
        parts.append(U @ (U.T @ g))
    psi = MixedSectorState.from_arrays(window.configs, np.concatenate(parts), strict=False)
    psi._masks = window.mask_cache
    return psi.normalized()


def sample_subspace_states(window: WindowBasis, count: int, seed: int) -> list[MixedSectorState]:
    """``[extremal candidate] + count`` projected Gaussian samples (sample ``i`` uses stream ``i``)."""
    if window.rank == 0:
        raise ValueError("the spectral window is empty")
    return [extremal_candidate(window)] + [sample_state(window, seed, i) for i in range(count)]


def in_window(psi: MixedSectorState, window: WindowBasis) -> float:
    """Norm of the component of ``psi`` outside the window."""
    comps = {N: (configs, U) for N, configs, U in window.parts}
    err = 0.0
    amplitudes = psi.amplitudes
    for X, a in amplitudes.items():
        if len(X) not in comps:
            err += abs(a) ** 2
    for N, (configs, U) in comps.items():
        v = np.array([amplitudes.get(X, 0) for X in configs])
        r = v - U @ (U.T @ v)
        err += float(np.vdot(r, r).real)
    return math.sqrt(err)
