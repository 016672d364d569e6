"""Cluster geometry on the integer chain.

Everything here rests on one change of variables.  For a configuration
``x_1 < ... < x_n`` put ``u_i = x_i - i``; ``u`` is non-decreasing, and two
configurations are at product distance ``sum_i |u_i - v_i|``.  A configuration
has ``k`` clusters exactly when its ``u``-sequence takes ``k`` distinct values,
so closest-``k``-cluster problems are one-dimensional contiguous ``k``-median
problems on ``u`` (integer levels, strictly increasing when ``k`` is exact).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .graphs import as_config


@dataclass(frozen=True)
class DropletSpec:
    """Interval of ``size`` sites whose middle particle sits at ``center``.

    For even sizes the middle particle is the right one of the two central sites.
    """

    center: int
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("droplet size must be >= 1")

    @property
    def sites(self) -> tuple:
        h = self.size // 2
        lo = self.center - h
        return tuple(range(lo, lo + self.size))

    @classmethod
    def from_start(cls, start: int, size: int) -> "DropletSpec":
        return cls(start + size // 2, size)


@dataclass(frozen=True)
class ClusterDecomposition:
    """A configuration written as ``k`` non-touching droplets.

    ``magnet_form`` is true when every droplet is centred at a particle of the
    source configuration (the construction of the closest-cluster lemma).
    """

    magnets: tuple
    sizes: tuple
    realized: tuple
    distance: int
    magnet_form: bool

    @property
    def droplets(self) -> list[DropletSpec]:
        return [DropletSpec(c, m) for c, m in zip(self.magnets, self.sizes)]


def cluster_count(X: Iterable[int]) -> int:
    """Number of maximal runs of consecutive integers in ``X``."""
    xs = as_config(X)
    if not xs:
        return 0
    return 1 + sum(1 for a, b in zip(xs, xs[1:]) if b - a > 1)


def u_sequence(X: Sequence[int]) -> np.ndarray:
    xs = np.asarray(as_config(X), dtype=np.int64)
    return xs - np.arange(1, len(xs) + 1)


def config_from_levels(levels: Sequence[int]) -> tuple:
    """Inverse of ``u_sequence``."""
    return tuple(int(v) + i for i, v in enumerate(levels, 1))


def product_distance(X: Sequence[int], Y: Sequence[int]) -> int:
    """Chain product distance: sorted matching."""
    if len(X) != len(Y):
        raise ValueError("configuration sizes differ")
    return int(sum(abs(a - b) for a, b in zip(sorted(X), sorted(Y))))


# -- single droplets ----------------------------------------------------------

def closest_droplets(X: Sequence[int]) -> tuple[int, list[DropletSpec]]:
    """All n-intervals at minimal distance from ``X``, with that distance.

    The interval starting at ``s`` costs ``sum |u_i - (s-1)|``, so the minimisers
    are exactly the integer medians of ``u``.
    """
    u = u_sequence(X)
    n = len(u)
    if n == 0:
        raise ValueError("need a non-empty configuration")
    lo, hi = int(u[(n - 1) // 2]), int(u[n // 2])
    dist = int(np.abs(u - lo).sum())
    return dist, [DropletSpec.from_start(v + 1, n) for v in range(lo, hi + 1)]


# -- at most K clusters -------------------------------------------------------

@lru_cache(maxsize=1 << 18)
def _at_most_table(u: tuple, K: int) -> tuple:
    """best[j] = min cost of splitting ``u`` into at most j+1 contiguous median groups."""
    n = len(u)
    pre = [0]
    for v in u:
        pre.append(pre[-1] + v)

    def cost(a, b):  # u[a:b], median at u[(a+b-1)//2]... any median works
        m = (a + b) // 2
        med = u[m]
        return med * (m - a) - (pre[m] - pre[a]) + (pre[b] - pre[m]) - med * (b - m)

    INF = float("inf")
    f = [cost(0, i) for i in range(n + 1)]
    best = [f[n]]
    for _ in range(1, K):
        g = [0] + [INF] * n
        for i in range(1, n + 1):
            g[i] = min(f[t] + cost(t, i) for t in range(0, i))
        f = g
        best.append(f[n])
    return tuple(int(b) for b in best)


def _at_most_costs(X: Sequence[int], K: int) -> tuple:
    u = u_sequence(X)
    if len(u) == 0:
        return (0,) * K
    return _at_most_table(tuple(int(v) for v in u - u[0]), K)


def distance_to_at_most_K(X: Sequence[int], K: int) -> tuple[int, int]:
    """``(d_n(X, V_{n,K}), k_min)`` with ``k_min`` the smallest cluster count attaining it.

    ``V_{n,K}`` is the set of n-particle configurations with at most ``K`` clusters.
    For the empty configuration the result is ``(0, 0)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    n = len(X)
    if n == 0:
        return 0, 0
    K = min(K, n)
    exact = exact_k_distances(X, K)
    d = min(exact)
    return d, 1 + exact.index(d)


def distance_at_most(X: Sequence[int], K: int) -> int:
    """Fast ``d_n(X, V_{n,K})`` (no minimal-k report)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(X) == 0:
        return 0
    return _at_most_costs(X, min(K, len(X)))[-1]


# -- exactly k clusters -------------------------------------------------------

def _level_window(u: np.ndarray) -> np.ndarray:
    n = len(u)
    return np.arange(int(u.min()) - n, int(u.max()) + n + 1)


def _exact_tables(u: np.ndarray, kmax: int):
    """Forward tables for strictly increasing integer levels.

    F[j][i, c] = min cost of covering u[:i] by j groups whose last level is <= c.
    """
    c = _level_window(u)
    n, W = len(u), len(c)
    P = np.vstack([np.zeros(W), np.cumsum(np.abs(u[:, None] - c[None, :]), axis=0)])
    INF = np.inf
    F0 = np.full((n + 1, W), INF)
    F0[0] = 0.0
    tables = [F0]
    for j in range(1, kmax + 1):
        prev = tables[-1]
        shifted = np.full((n + 1, W), INF)
        shifted[:, 1:] = prev[:, :-1]  # previous level strictly below c
        G = np.full((n + 1, W), INF)
        for i in range(j, n + 1):
            G[i] = (shifted[j - 1:i] + P[i] - P[j - 1:i]).min(axis=0)
        tables.append(np.minimum.accumulate(G, axis=1))
    return c, P, tables


def exact_k_distances(X: Sequence[int], kmax: int) -> list[int]:
    """``[d_n(X, V^=_{n,k}) for k = 1..kmax]`` (exactly ``k`` clusters)."""
    u = u_sequence(X)
    if not 1 <= kmax <= len(u):
        raise ValueError(f"k must lie in [1, {len(u)}]")
    _, _, tables = _exact_tables(u, kmax)
    return [int(t[len(u), -1]) for t in tables[1:]]


def _magnet_candidates(X: tuple, u: np.ndarray, k: int):
    n = len(X)
    for cuts in combinations(range(1, n), k - 1):
        bounds = (0,) + cuts + (n,)
        levels, magnets, sizes = [], [], []
        for a, b in zip(bounds, bounds[1:]):
            mid = a + (b - a) // 2
            levels.append(int(u[mid]))
            magnets.append(X[mid])
            sizes.append(b - a)
        if any(p >= q for p, q in zip(levels, levels[1:])):
            continue
        cost = int(sum(np.abs(u[a:b] - lv).sum() for a, b, lv in zip(bounds, bounds[1:], levels)))
        yield cost, tuple(magnets), tuple(sizes)


def _backtrack(u: np.ndarray, k: int, target: int):
    """Lexicographically smallest droplet centres among optimal exact-k solutions."""
    n = len(u)
    c = _level_window(u)
    W = len(c)
    # suffix table: S[j][i, w] = min cost covering u[i:] with j groups all at level > c[w]
    P = np.vstack([np.zeros(W), np.cumsum(np.abs(u[:, None] - c[None, :]), axis=0)])
    INF = np.inf
    S = [np.full((n + 1, W), INF)]
    S[0][n] = 0.0
    for j in range(1, k + 1):
        prev = S[-1]
        H = np.full((n + 1, W), INF)  # first group starts at i with level exactly c[w]
        for i in range(0, n - j + 1):
            # group u[i:e], remainder from e with j-1 groups above c[w]
            ends = np.arange(i + 1, n - (j - 1) + 1)
            vals = P[ends] - P[i] + prev[ends]
            H[i] = vals.min(axis=0)
        # convert to "level strictly above c[w]" via suffix minimum shifted by one
        above = np.full((n + 1, W), INF)
        above[:, :-1] = np.minimum.accumulate(H[:, ::-1], axis=1)[:, ::-1][:, 1:]
        S.append(above)
    groups, start, floor, remaining = [], 0, -1, k
    while remaining:
        best = None
        for e in range(start + 1, n - (remaining - 1) + 1):
            for w in range(floor + 1, W):
                cost = P[e, w] - P[start, w]
                rest = S[remaining - 1][e, w]
                if cost + rest + _spent(groups, u) != target:
                    continue
                m = e - start
                centre = int(c[w]) + start + 1 + m // 2
                key = (centre, e)
                if best is None or key < best[0]:
                    best = (key, e, w)
        _, e, w = best
        groups.append((start, e, int(c[w])))
        start, floor, remaining = e, w, remaining - 1
    return groups


def _spent(groups, u) -> int:
    return int(sum(np.abs(u[a:b] - lv).sum() for a, b, lv in groups))


def closest_k_cluster(X: Sequence[int], k: int) -> ClusterDecomposition:
    """A configuration with exactly ``k`` clusters at minimal distance from ``X``.

    Magnet-form solutions (droplets centred on particles of ``X``) are preferred
    when optimal; ties are broken by the lexicographically smallest centre tuple.
    """
    Xc = as_config(X)
    n = len(Xc)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    u = u_sequence(Xc)
    target = exact_k_distances(Xc, k)[-1]
    magnets = [(m, s) for cost, m, s in _magnet_candidates(Xc, u, k) if cost == target]
    if magnets:
        m, s = min(magnets)
        realized = tuple(sorted(x for c, size in zip(m, s) for x in DropletSpec(c, size).sites))
        return ClusterDecomposition(m, s, realized, target, True)
    groups = _backtrack(u, k, target)
    levels = [lv for a, b, lv in groups for _ in range(a, b)]
    realized = config_from_levels(levels)
    centres = tuple(realized[a + (b - a) // 2] for a, b, _ in groups)
    sizes = tuple(b - a for a, b, _ in groups)
    return ClusterDecomposition(centres, sizes, realized, target, False)


# -- appendix lemmas ----------------------------------------------------------

def a_yk_distance(Y: Sequence[int], k: int, K: int, ell: int, L: int) -> int:
    """``d(Y u [ell+1, ell+k], V_{|Y|+k,K})``: the closest way to complete ``Y``
    by ``k`` particles outside ``[1, ell]``.
    """
    Yc = as_config(Y)
    _check_ayk(Yc, k, K, ell, L)
    return distance_at_most(Yc + tuple(range(ell + 1, ell + k + 1)), K)


def a_yk_distance_oracle(Y: Sequence[int], k: int, K: int, ell: int, L: int,
                         brute: bool = False) -> int:
    """Exhaustive minimum over all ``Z`` in ``[ell+1, L]`` with ``|Z| = k``.

    Each ``d(Y u Z, V_{n,K})`` comes from ``distance_at_most``, or from the
    window enumeration when ``brute`` (only feasible for small ``n``).
    """
    Yc = as_config(Y)
    _check_ayk(Yc, k, K, ell, L)
    dist = brute_force_at_most_distance if brute else distance_at_most
    return min(dist(Yc + Z, K) for Z in combinations(range(ell + 1, L + 1), k))


def _check_ayk(Y, k, K, ell, L):
    if not 1 <= len(Y) <= ell - 1:
        raise ValueError(f"need 1 <= |Y| <= ell-1, got |Y|={len(Y)}, ell={ell}")
    if Y[0] < 1 or Y[-1] > ell:
        raise ValueError(f"Y must lie in [1, {ell}]")
    if not 1 <= k <= L - ell:
        raise ValueError(f"need 1 <= k <= L-ell = {L - ell}, got k={k}")
    if K < 1:
        raise ValueError("K must be >= 1")


def shift_rightmost_component(V: Sequence[int]) -> tuple:
    Vc = as_config(V)
    if cluster_count(Vc) < 2:
        raise ValueError("need at least two clusters")
    i = len(Vc) - 1
    while i > 0 and Vc[i - 1] == Vc[i] - 1:
        i -= 1
    return Vc[:i] + tuple(x - 1 for x in Vc[i:])


def right_shift_lemma_check(V: Sequence[int], K: int) -> bool:
    """Shifting the right-most cluster one step left never moves ``V`` away
    from ``V_{n,K}``."""
    return distance_at_most(shift_rightmost_component(V), K) <= distance_at_most(V, K)


# -- brute-force oracles ------------------------------------------------------

@lru_cache(maxsize=64)
def configs_in_window(n: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """All n-subsets of ``[lo, hi]`` as rows, with their cluster counts."""
    rows = np.array(list(combinations(range(lo, hi + 1), n)), dtype=np.int64).reshape(-1, n)
    cl = 1 + (np.diff(rows, axis=1) > 1).sum(axis=1) if n else np.zeros(len(rows), dtype=np.int64)
    rows.setflags(write=False)
    return rows, cl


def _window(X, window):
    n = len(X)
    return (min(X) - n, max(X) + n) if window is None else window


def brute_force_cluster_distance(X: Sequence[int], k: int, window=None) -> int:
    """Minimum over every n-subset with exactly ``k`` clusters inside the window."""
    Xc = as_config(X)
    lo, hi = _window(Xc, window)
    rows, cl = configs_in_window(len(Xc), lo, hi)
    sel = rows[cl == k]
    if len(sel) == 0:
        raise ValueError("window holds no such configuration")
    return int(np.abs(sel - np.array(Xc)).sum(axis=1).min())


def brute_force_at_most_distance(X: Sequence[int], K: int, window=None) -> int:
    Xc = as_config(X)
    lo, hi = _window(Xc, window)
    rows, cl = configs_in_window(len(Xc), lo, hi)
    sel = rows[cl <= K]
    return int(np.abs(sel - np.array(Xc)).sum(axis=1).min())


def brute_force_droplets(X: Sequence[int], window=None) -> tuple[int, list[tuple]]:
    """Distance to the nearest n-interval and all intervals attaining it."""
    Xc = as_config(X)
    n = len(Xc)
    lo, hi = _window(Xc, window)
    costs = {s: product_distance(Xc, range(s, s + n)) for s in range(lo, hi - n + 2)}
    d = min(costs.values())
    return d, [tuple(range(s, s + n)) for s, v in sorted(costs.items()) if v == d]
