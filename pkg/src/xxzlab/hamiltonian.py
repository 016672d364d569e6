"""N-particle XXZ operators in hard-core form, the Pauli tensor oracle and the Ising limit.

On the N-particle sector of a subgraph ``G'`` inside a host ``G``::

    H^N = -1/(2 Delta) L'_N + 1/2 (1 - 1/Delta) D_G + V

with ``L'_N`` the graph Laplacian of the product of ``G'`` and ``D_G`` the surface
measure counted in the host.  Off-diagonal entries are ``-1/(2 Delta)`` on
product-graph edges; the diagonal is ``D'/(2 Delta) + (1 - 1/Delta) D_G / 2 + V``.
``Delta = inf`` is a genuine parameter value with ``1/Delta = 0``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .clusters import cluster_count
from .graphs import (InducedSubgraph, SymmetricProductGraph, build_symmetric_product, chain,
                     isoperimetric_min)

MAX_ORACLE_L = 12
ISING_PHASE_MSG = "Ising phase requires delta > 1"


def inv_delta(delta: float) -> float:
    return 0.0 if math.isinf(delta) else 1.0 / delta


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not delta > 1:  # also rejects nan
        raise ValueError(ISING_PHASE_MSG)
    return delta


@dataclass(frozen=True)
class ModelParams:
    """Anisotropy and non-negative background field (site -> value, missing sites are 0)."""

    delta: float
    field: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "delta", check_delta(self.delta))
        fld = {int(k): float(v) for k, v in dict(self.field).items()}
        bad = {k: v for k, v in fld.items() if not v >= 0}
        if bad:
            raise ValueError(f"field must be non-negative, got {bad}")
        object.__setattr__(self, "field", fld)

    @classmethod
    def chain_field(cls, delta: float, values: Sequence[float] | None = None) -> "ModelParams":
        """Field ``values[j-1]`` on site ``j`` of ``[1, L]``."""
        vals = [] if values is None else list(values)
        return cls(delta, {j: v for j, v in enumerate(vals, 1)})

    @property
    def g(self) -> float:
        """Hopping strength ``1/(2 Delta)``."""
        return 0.5 * inv_delta(self.delta)

    @property
    def beta(self) -> float:
        """Boundary field strength ``(1 - 1/Delta)/2``."""
        return 0.5 * (1.0 - inv_delta(self.delta))

    def V(self, site: int) -> float:
        return self.field.get(site, 0.0)

    def threshold(self, K: int) -> float:
        return threshold_energy(K, self.delta)


def threshold_energy(K: int, delta: float) -> float:
    """K-cluster break-up energy ``K (1 - 1/Delta)``."""
    if K < 0:
        raise ValueError("K must be >= 0")
    return K * (1.0 - inv_delta(check_delta(delta)))


def sector_threshold(k: int, delta: float, d_min: int = 2) -> float:
    """``E_{N,k} = (1 - 1/Delta)(D_min + k)/2``; on the chain ``D_min = 2`` and
    ``k = 2(K-1)`` recovers ``E_K``."""
    return 0.5 * (1.0 - inv_delta(check_delta(delta))) * (d_min + k)


@dataclass
class SectorOperator:
    """Dense N-particle operator; row ``i`` belongs to ``product.configs[i]``."""

    product: SymmetricProductGraph | None
    matrix: np.ndarray
    params: ModelParams
    N: int
    potential: np.ndarray  # V^N per configuration

    @property
    def configs(self) -> list:
        return [()] if self.product is None else self.product.configs

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def degree_full(self) -> np.ndarray:
        return np.zeros(1, np.int64) if self.product is None else self.product.degree_full

    @property
    def degree_sub(self) -> np.ndarray:
        return np.zeros(1, np.int64) if self.product is None else self.product.degree_sub

    @property
    def boundary(self) -> np.ndarray:
        """Host edges leaving the kept vertex set, per configuration."""
        return self.degree_full - self.degree_sub

    @property
    def adjacency(self) -> np.ndarray:
        if self.product is None:
            return np.zeros((1, 1))
        return self.product.adjacency_matrix()

    @property
    def d_min(self) -> int:
        """Minimal host surface measure over the sector (equals the host minimum under (A2))."""
        return int(self.degree_full.min())

    def distances(self, rows, cols) -> np.ndarray:
        if self.product is None:
            return np.zeros((len(rows), len(cols)), dtype=np.int64)
        return self.product.distances_between(rows, cols)


def _check_a2(sub: InducedSubgraph, N: int) -> None:
    parent = sub.parent
    interior = [v for v in parent.vertices if v not in parent.frontier]
    host = isoperimetric_min(parent, interior, N)
    kept = isoperimetric_min(parent, sub.kept, N)
    if host != kept:
        raise ValueError(f"assumption (A2) fails at N={N}: host minimum {host}, subgraph minimum {kept}")


def build_sector(sub: InducedSubgraph, N: int, params: ModelParams,
                 check: bool = True) -> SectorOperator:
    """Dense N-particle operator with droplet boundary conditions and field."""
    if not 0 <= N <= len(sub.kept):
        raise ValueError(f"N={N} out of range [0, {len(sub.kept)}]")
    if N == 0:
        return SectorOperator(None, np.zeros((1, 1)), params, 0, np.zeros(1))
    if check:
        if not sub.is_geodesic():
            raise ValueError("assumption (A1) fails: subgraph is not geodesic")
        _check_a2(sub, N)
    prod = build_symmetric_product(sub, N)
    g, beta = params.g, params.beta
    pot = np.array([sum(params.V(x) for x in X) for X in prod.configs])
    diag = g * prod.degree_sub + beta * prod.degree_full + pot
    H = np.diag(diag)
    rows = np.repeat(np.arange(len(prod)), prod.degree_sub)
    cols = np.fromiter((j for nb in prod.neighbors for j in nb), dtype=np.int64, count=len(rows))
    H[rows, cols] = -g
    return SectorOperator(prod, H, params, N, pot)


def build_full(sub: InducedSubgraph, params: ModelParams, workers: int = 1,
               check: bool = True) -> list[SectorOperator]:
    """All sectors ``N = 0..|V'|``; results are ordered by N whatever the worker count."""
    Ns = range(len(sub.kept) + 1)
    if workers <= 1:
        return [build_sector(sub, N, params, check) for N in Ns]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda N: build_sector(sub, N, params, check), Ns))


def full_spectrum(sectors: Sequence[SectorOperator]) -> np.ndarray:
    return np.sort(np.concatenate([np.linalg.eigvalsh(s.matrix) for s in sectors]))


# -- Pauli tensor oracle ----------------------------------------------------

_N_OP = sp.csr_matrix(np.diag([0.0, 1.0]))
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]])
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma^y (x) sigma^y is real, so the whole spin Hamiltonian is real
_ZZ = sp.csr_matrix(np.kron(_SZ, _SZ).real)
_XX_YY = sp.csr_matrix((np.kron(_SX, _SX) + np.kron(_SY, _SY)).real)


def _embed(op, first: int, width: int, L: int):
    """Place ``op`` acting on sites ``first..first+width-1`` (site 1 = most significant qubit)."""
    left = sp.identity(2 ** (first - 1), format="csr")
    right = sp.identity(2 ** (L - first - width + 1), format="csr")
    return sp.kron(sp.kron(left, op), right, format="csr")


def tensor_oracle(L: int, params: ModelParams) -> np.ndarray:
    """Spin-form Hamiltonian on ``(C^2)^{ox L}``; basis index of X is sum_j 2^(L-j)."""
    if not 1 <= L <= MAX_ORACLE_L:
        raise ValueError(f"tensor oracle limited to 1 <= L <= {MAX_ORACLE_L}")
    dim = 2 ** L
    H = sp.csr_matrix((dim, dim))
    bond = 0.25 * (sp.identity(4) - _ZZ) - 0.25 * inv_delta(params.delta) * _XX_YY
    for j in range(1, L):
        H = H + _embed(bond, j, 2, L)
    H = H + params.beta * (_embed(_N_OP, 1, 1, L) + _embed(_N_OP, L, 1, L))
    for j in range(1, L + 1):
        if params.V(j):
            H = H + params.V(j) * _embed(_N_OP, j, 1, L)
    return H.toarray()


def config_to_index(X: Sequence[int], L: int) -> int:
    return sum(1 << (L - j) for j in X)


def index_to_config(i: int, L: int) -> tuple:
    return tuple(j for j in range(1, L + 1) if i >> (L - j) & 1)


# -- Ising limit ------------------------------------------------------------

def ising_eigensystem(L: int, field: Sequence[float] | Mapping[int, float] | None = None) -> list[tuple]:
    """Every ``X`` in ``[1, L]`` with its energy ``cl(X) + sum_{j in X} V_j`` at ``Delta = inf``."""
    if field is None:
        V = {}
    elif isinstance(field, Mapping):
        V = dict(field)
    else:
        V = {j: v for j, v in enumerate(field, 1)}
    if any(v < 0 for v in V.values()):
        raise ValueError("field must be non-negative")
    out = []
    for N in range(L + 1):
        for X in combinations(range(1, L + 1), N):
            out.append((X, cluster_count(X) + sum(V.get(j, 0.0) for j in X)))
    return out


def chain_sector(L: int, N: int, params: ModelParams, pad: int = 1) -> SectorOperator:
    """Shortcut for ``[1, L]`` inside the truncated integer line."""
    return build_sector(chain(L, pad), N, params)


def chain_full(L: int, params: ModelParams, pad: int = 1, workers: int = 1) -> list[SectorOperator]:
    return build_full(chain(L, pad), params, workers)

