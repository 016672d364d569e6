"""Exact computations in the Ising limit: cluster-subset counts, maximally
entangled low-energy states, the disordered construction and Monte-Carlo
moments of the number of K-cluster subsets of a random set.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .clusters import cluster_count
from .entanglement import MixedSectorState, sample_rng

INT64_MAX = 2 ** 63 - 1


def _checked(n: int) -> int:
    if n > INT64_MAX:
        raise OverflowError(f"count {n} exceeds the 64-bit range")
    return n


# -- counting ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _P(K: int, m: int) -> int:
    # P_{0,m} = 1 for m >= -1 (the empty set; m = -1 arises when a cluster ends at the last site)
    if K == 0:
        return 1
    if m < 2 * K - 1:
        return 0
    return sum((r - 1) * _P(K - 1, m - r) for r in range(2, m + 2 - 2 * (K - 1)))


def count_exact(K: int, ell: int) -> int:
    """Number of subsets of ``[1, ell]`` with exactly ``K`` clusters, by the
    first-cluster recursion ``P_{K+1,l} = sum_r (r-1) P_{K,l-r}``."""
    if K < 0 or ell < 0:
        raise ValueError("need K >= 0 and ell >= 0")
    for k in range(K + 1):  # fill the cache bottom-up to keep recursion shallow
        for m in range(-1, ell + 1, 64):
            _P(k, m)
    return _checked(_P(K, ell))


def count_ending(K: int, ell: int) -> int:
    """Subsets of ``[1, ell]`` with ``K`` clusters that contain ``ell``,
    conditioned on the length ``s`` of the last cluster."""
    if K < 1 or ell < 0:
        raise ValueError("need K >= 1 and ell >= 0")
    return _checked(sum(count_exact(K - 1, ell - s - 1) if ell - s - 1 >= 0 else (1 if K == 1 else 0)
                        for s in range(1, ell + 1)))


def count_closed_form_oracle(K: int, ell: int, ending: bool = False) -> int:
    """``binom(ell+1, 2K)``, or ``binom(ell, 2K-1)`` for sets containing ``ell``."""
    if ending:
        return _checked(math.comb(ell, 2 * K - 1))
    return _checked(math.comb(ell + 1, 2 * K))


def count_enumerate(K: int, ell: int, ending: bool = False) -> int:
    """Brute force over all ``2^ell`` subsets."""
    n = 0
    for N in range(ell + 1):
        for Y in combinations(range(1, ell + 1), N):
            if cluster_count(Y) == K and (not ending or (Y and Y[-1] == ell)):
                n += 1
    return n


def n_kell(K: int, ell: int) -> int:
    """``P~_{K,l} + P_{0,l} + ... + P_{K-1,l}``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return _checked(count_ending(K, ell) + sum(count_exact(i, ell) for i in range(K)))


def asymptotic_ratio(K: int, ell: int) -> Fraction:
    """``P_{K,l} (2K)! / l^{2K}``, exactly."""
    return Fraction(count_exact(K, ell) * math.factorial(2 * K), ell ** (2 * K))


# -- extremal deterministic state ------------------------------------------------

def subsets_by_clusters(lo: int, hi: int, K: int):
    """Every subset of ``[lo, hi]`` with at most ``K`` clusters (unordered)."""
    yield ()
    if K < 1:
        return
    for a in range(lo, hi + 1):
        for b in range(a, hi + 1):
            run = tuple(range(a, b + 1))
            for rest in subsets_by_clusters(b + 2, hi, K - 1):
                yield run + rest


def extremal_configs(K: int, ell: int) -> list[tuple]:
    """``X_1, ..., X_{N+1}``: each ``Y_j`` (sets with K clusters ending at ``ell``, then
    sets with fewer clusters, each group lexicographic) extended by ``[ell+1, ell+j]``,
    plus ``{1, 3, ..., 2K-1}``."""
    if K < 1 or ell < 2 * K:
        raise ValueError(f"need K >= 1 and ell >= 2K, got ell={ell}, K={K}")
    subsets = list(subsets_by_clusters(1, ell, K))
    B1 = sorted(Y for Y in subsets if Y and Y[-1] == ell and cluster_count(Y) == K)
    B2 = sorted(Y for Y in subsets if cluster_count(Y) <= K - 1)
    Ys = B1 + B2
    Xs = [Y + tuple(range(ell + 1, ell + j + 1)) for j, Y in enumerate(Ys, 1)]
    Xs.append(tuple(range(1, 2 * K, 2)))
    return Xs


def build_extremal_state(K: int, ell: int, L: int) -> MixedSectorState:
    """Uniform superposition of ``extremal_configs``; every configuration has at most
    ``K`` clusters, and the entanglement across ``ell`` is ``log(N_{K,l} + 1)``."""
    N = n_kell(K, ell)
    if L < ell + N:
        raise ValueError(f"need L >= ell + N_(K,ell) = {ell + N}, got L={L}")
    return MixedSectorState.uniform(extremal_configs(K, ell))


# -- disorder --------------------------------------------------------------------

@dataclass(frozen=True)
class DisorderModel:
    """i.i.d. non-negative site fields.

    ``bernoulli``: value 1 with probability ``param``, else 0.
    ``uniform``: uniform on ``[0, 1]`` (``param`` unused).
    ``exponential``: rate ``param``.
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bernoulli", "uniform", "exponential"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.kind == "bernoulli" and not 0 <= self.param <= 1:
            raise ValueError("bernoulli parameter must lie in [0, 1]")
        if self.kind == "exponential" and not self.param > 0:
            raise ValueError("exponential rate must be > 0")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "bernoulli":
            return (rng.random(n) < self.param).astype(float)
        if self.kind == "uniform":
            return rng.random(n)
        return rng.exponential(1 / self.param, n)

    def cdf(self, x: float) -> float:
        """``P(V <= x)``."""
        if x < 0:
            return 0.0
        if self.kind == "bernoulli":
            return 1.0 if x >= 1 else 1 - self.param
        if self.kind == "uniform":
            return min(1.0, x)
        return 1 - math.exp(-self.param * x)


def c_ka(K: int, a: float) -> float:
    """``(a/2)^{K-1} / (K-1)!``."""
    return (a / 2) ** (K - 1) / math.factorial(K - 1)


@dataclass
class DisorderedState:
    state: MixedSectorState | None
    M: int
    accepted: bool
    reason: str = ""
    configs: list | None = None


def build_disordered_state(V: Sequence[float], K: int, delta0: float, ell: int, L: int,
                           a: float) -> DisorderedState:
    """Uniform superposition of ``M = floor(C_{K,a} ell^{K-1})`` configurations
    ``Y_j u {z_j}``, ``Y_j`` distinct low-field subsets of ``[1, ell]`` with at most
    ``K-1`` sites and ``z_j`` distinct low-field sites right of ``ell``.

    ``delta = delta0 / K`` is the low-field threshold.  The realization is
    rejected when ``[1, ell]`` has fewer than ``ell a`` low-field sites, or
    ``[ell+1, L]`` fewer than ``C_{K,a} ell^{K-1}``.
    """
    V = np.asarray(V, dtype=float)
    if len(V) != L or not 1 <= ell < L:
        raise ValueError("need len(V) == L and 1 <= ell < L")
    if K < 1 or not 0 < a:
        raise ValueError("need K >= 1 and a > 0")
    delta = delta0 / K
    C = c_ka(K, a)
    M = math.floor(C * ell ** (K - 1))
    A = [j for j in range(1, ell + 1) if V[j - 1] <= delta]
    B = [j for j in range(ell + 1, L + 1) if V[j - 1] <= delta]
    if len(A) < ell * a:
        return DisorderedState(None, M, False, "too few low-field sites in [1, ell]")
    if len(B) < C * ell ** (K - 1):
        return DisorderedState(None, M, False, "too few low-field sites in [ell+1, L]")
    if M < 1:
        return DisorderedState(None, M, False, "M = 0")
    Ys = []
    for size in range(K):
        for Y in combinations(A, size):
            Ys.append(Y)
            if len(Ys) == M:
                break
        if len(Ys) == M:
            break
    if len(Ys) < M:
        return DisorderedState(None, M, False, "too few low-field subsets")
    Xs = [Y + (z,) for Y, z in zip(Ys, B[:M])]
    return DisorderedState(MixedSectorState.uniform(Xs), M, True, "", Xs)


def component_energy(X: Sequence[int], V: Sequence[float]) -> float:
    """Ising-limit energy ``cl(X) + sum_{j in X} V_j``."""
    return cluster_count(X) + float(sum(V[j - 1] for j in X))


def rejection_rates(model: DisorderModel, K: int, delta0: float, ells: Sequence[int],
                    realizations: int, batches: int, seed: int, L_factor: int = 2,
                    a: float | None = None) -> dict[int, list[float]]:
    """Per ``ell``: rejected fraction in each of ``batches`` batches (``L = L_factor * ell``).

    Realization ``i`` of batch ``b`` at ``ell`` uses the stream ``(seed, (ell, b, i))``.
    """
    p0 = model.cdf(delta0 / K)
    a = 0.9 * p0 if a is None else a
    out = {}
    for ell in ells:
        L = L_factor * ell
        rates = []
        for b in range(batches):
            rej = 0
            for i in range(realizations):
                rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ell, b, i)))
                res = build_disordered_state(model.sample(rng, L), K, delta0, ell, L, a)
                rej += not res.accepted
            rates.append(rej / realizations)
        out[ell] = rates
    return out


# -- Monte Carlo for Q_{K,l} ------------------------------------------------------

def q_count(available: np.ndarray, K: int) -> np.ndarray:
    """Number of ``K``-cluster subsets of the sites flagged in each row of ``available``.

    Site-by-site DP with state (clusters so far, last site chosen); int64.
    """
    avail = np.atleast_2d(np.asarray(available, dtype=bool))
    S, ell = avail.shape
    if math.comb(ell + 1, 2 * K) > INT64_MAX:
        raise OverflowError("counts may exceed the 64-bit range")
    out_ = np.zeros((S, K + 1), dtype=np.int64)
    in_ = np.zeros((S, K + 1), dtype=np.int64)
    out_[:, 0] = 1
    for j in range(ell):
        a = avail[:, j:j + 1]
        new_in = np.zeros_like(in_)
        new_in[:, 1:] = in_[:, 1:] + out_[:, :-1]
        new_in *= a
        out_ = out_ + in_
        in_ = new_in
    return out_[:, K] + in_[:, K]


def q_count_enumerate(available: Sequence[bool], K: int) -> int:
    sites = [j + 1 for j, f in enumerate(available) if f]
    return sum(1 for N in range(len(sites) + 1) for X in combinations(sites, N) if cluster_count(X) == K)


def q_expectation_exact(K: int, ell: int, p):
    """``E(Q_{K,l})`` by the first-cluster recursion; ``p`` may be a ``Fraction`` for exact output.

    ``p`` is the probability that a site belongs to the random set.
    """
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    if K < 1:
        raise ValueError("K must be >= 1")
    zero = p * 0

    def q1(m):  # E(Q_{1,m}) = sum_i (m - i + 1) p^i
        return sum(((m - i + 1) * p ** i for i in range(1, m + 1)), zero)

    def q1_end(m):  # E(Q~_{1,m}) = p + ... + p^m
        return sum((p ** i for i in range(1, m + 1)), zero)

    @lru_cache(maxsize=None)
    def q(k, m):
        if k == 0:
            return zero + 1 if m >= -1 else zero
        if m < 2 * k - 1:
            return zero
        if k == 1:
            return q1(m)
        return sum((q1_end(r - 1) * q(k - 1, m - r) for r in range(2, m + 2 - 2 * (k - 1))), zero)

    return q(K, ell)


def q_expectation_enumerate(K: int, ell: int, p: Fraction) -> Fraction:
    """Exact expectation by summing over all ``2^ell`` outcomes."""
    total = Fraction(0)
    for mask in range(2 ** ell):
        avail = [(mask >> j) & 1 == 1 for j in range(ell)]
        k = sum(avail)
        total += p ** k * (1 - p) ** (ell - k) * q_count(np.array(avail), K)[0].item()
    return total


def _q_chunk(args):
    K, ell, p, seed, lo, hi = args
    out = np.empty(hi - lo, dtype=np.int64)
    avail = np.empty((hi - lo, ell), dtype=bool)
    for n, i in enumerate(range(lo, hi)):
        avail[n] = sample_rng(seed, i).random(ell) < p
    out[:] = q_count(avail, K)
    return out


def q_samples(K: int, ell: int, p: float, samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """``Q_{K,l}`` for samples ``0..samples-1``; sample ``i`` draws from stream ``(seed, i)``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    chunk = 4096
    tasks = [(K, ell, p, seed, lo, min(lo + chunk, samples)) for lo in range(0, samples, chunk)]
    if workers <= 1:
        parts = [_q_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_q_chunk, tasks))
    return np.concatenate(parts)


@dataclass
class QMoments:
    mean: float
    variance: float
    stderr: float
    exact_mean: float
    samples: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == self.exact_mean else math.inf
        return (self.mean - self.exact_mean) / self.stderr

    def var_over(self, ell: int, K: int) -> float:
        """``Var / l^{2K-1}``, the quantity a conjectured variance bound controls."""
        return self.variance / ell ** (2 * K - 1)


def q_moments_mc(K: int, ell: int, p: float, samples: int, seed: int, workers: int = 1) -> QMoments:
    """Sample mean, variance (ddof=1) and standard error of ``Q_{K,l}``."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    q = q_samples(K, ell, p, samples, seed, workers).astype(float)
    var = float(q.var(ddof=1))
    return QMoments(float(q.mean()), var, math.sqrt(var / samples), float(q_expectation_exact(K, ell, p)), samples)
