"""Eigendecompositions, spectral projections, resolvent norms and the decay-bound checks.

Operator 2-norms are largest singular values (LAPACK).  Every bound check
allows ``SLACK = 1e-9`` absolute slack and returns ``(lhs, rhs, passed)``.
Exponential rates may be infinite (``Delta = inf`` switches hopping off);
``exp(-inf * 0)`` is read as 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .clusters import cluster_count, distance_at_most
from .hamiltonian import SectorOperator, sector_threshold, threshold_energy

SLACK = 1e-9
DEGENERACY_TOL = 1e-9
IN_INTERVAL_TOL = 1e-10
MAX_RESOLVENT_NORM = 1e12


class PreconditionError(ValueError):
    """Raised with the list of violated hypotheses of a bound."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    def window(self, a: float, b: float, tol: float = IN_INTERVAL_TOL) -> np.ndarray:
        """Orthonormal basis (columns) of the eigenspaces with eigenvalue in ``[a, b]``."""
        lam = self.eigenvalues
        sel = (lam >= a - tol) & (lam <= b + tol)
        return self.eigenvectors[:, sel]


def _as_matrix(H) -> np.ndarray:
    return np.asarray(H.matrix if isinstance(H, SectorOperator) else H, dtype=float)


def _canonical_block(Vb: np.ndarray) -> np.ndarray:
    """Basis of span(Vb) that depends only on the subspace, not on Vb itself."""
    m = Vb.shape[1]
    _, _, piv = sla.qr(Vb.T, mode="economic", pivoting=True)
    cols = np.sort(piv[:m])
    Q, R = np.linalg.qr(Vb @ Vb[cols].T)  # columns of the block projector
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def eigendecompose(H, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralData:
    """Full decomposition with ascending eigenvalues.

    Eigenvectors of degenerate clusters (gaps below ``degeneracy_tol * max(1, ||H||)``)
    are replaced by a canonical basis, so the output is independent of the
    LAPACK path taken.  Single eigenvectors get a positive largest-magnitude entry.
    """
    A = _as_matrix(H)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    n = A.shape[0]
    if not np.any(A - np.diag(np.diag(A))):
        d = np.diag(A)
        order = np.argsort(d, kind="stable")
        return SpectralData(d[order].copy(), np.eye(n)[:, order])
    lam, V = np.linalg.eigh(A)
    tol = degeneracy_tol * scale
    breaks = np.flatnonzero(np.diff(lam) > tol) + 1
    for a, b in zip(np.r_[0, breaks], np.r_[breaks, n]):
        if b - a == 1:
            v = V[:, a]
            i = int(np.argmax(np.abs(v) - 1e-12 * np.arange(n)))  # first maximal entry
            if v[i] < 0:
                V[:, a] = -v
        else:
            V[:, a:b] = _canonical_block(V[:, a:b])
    return SpectralData(lam, V)


def spectral_projection(spec: SpectralData, a: float, b: float, tol: float = IN_INTERVAL_TOL) -> np.ndarray:
    """``sum_{lambda_i in [a, b]} v_i v_i^T``."""
    if a > b:
        raise ValueError("need a <= b")
    U = spec.window(a, b, tol)
    return U @ U.T


def operator_norm(B: np.ndarray) -> float:
    """Largest singular value; 0 for empty blocks."""
    B = np.asarray(B)
    if B.size == 0:
        return 0.0
    if B.shape[0] == 1 or B.shape[1] == 1:
        return float(np.linalg.norm(B))
    return float(sla.svdvals(B)[0])


def resolvent(spec: SpectralData, z: complex) -> np.ndarray:
    """``(H - z)^{-1}``; rejects z so close to the spectrum that the norm exceeds 1e12."""
    gaps = spec.eigenvalues - z
    if np.abs(gaps).min() * MAX_RESOLVENT_NORM < 1:
        raise ValueError(f"z={z} lies (numerically) in the spectrum")
    V = spec.eigenvectors
    return (V / gaps) @ V.T


def decay_factor(rate: float, dist) -> np.ndarray:
    """``exp(-rate * dist)`` with ``exp(-inf * 0) = 1``."""
    dist = np.asarray(dist, dtype=float)
    if math.isinf(rate):
        return np.where(dist == 0, 1.0, 0.0)
    return np.exp(-rate * dist)


# -- abstract Combes-Thomas ------------------------------------------------------

@dataclass
class CTSystem:
    """``H = -g A + W + Y`` on a finite graph.

    ``A`` is a symmetric non-negative hopping matrix of range ``s_max``, ``W`` a
    strictly positive diagonal and ``Y`` an extra non-negative diagonal potential.
    ``distances(rows, cols)`` returns graph distances between index sets.
    """

    A: np.ndarray
    W: np.ndarray
    g: float
    c: float
    s_max: int
    distances: Callable
    Y: np.ndarray = None

    def __post_init__(self):
        if self.Y is None:
            self.Y = np.zeros_like(self.W)

    @property
    def matrix(self) -> np.ndarray:
        return -self.g * self.A + np.diag(self.W + self.Y)

    @property
    def W0(self) -> float:
        return float(self.W.min())

    def form_bound_margin(self) -> float:
        """``min eig(c W +- A)``, non-negative exactly when ``-cW <= A <= cW``."""
        cW = np.diag(self.c * self.W)
        return float(min(np.linalg.eigvalsh(cW + self.A)[0], np.linalg.eigvalsh(cW - self.A)[0]))

    @classmethod
    def from_sector(cls, sector: SectorOperator, split: str = "diagonal") -> "CTSystem":
        """XXZ sector as ``-g A + W + Y`` with ``g = 1/(2 Delta)``, ``c = 2``, ``s_max = 1``.

        ``split="diagonal"``: W is the full diagonal and Y = 0.
        ``split="internal"``: W = D'/2 (subgraph degree) and Y holds the boundary
        field and the background potential.
        """
        H = sector.matrix
        A = sector.adjacency
        g = sector.params.g
        if split == "diagonal":
            W, Y = np.diag(H).copy(), np.zeros(H.shape[0])
        elif split == "internal":
            W = 0.5 * sector.degree_sub.astype(float)
            Y = sector.params.beta * sector.boundary + sector.potential
        else:
            raise ValueError(f"unknown split {split!r}")
        return cls(A, W, g, 2.0, 1, sector.distances, Y)


@dataclass
class CTParameters:
    g: float
    c: float
    s_max: int
    W0: float
    kappa_z: float

    @property
    def eta_z(self) -> float:
        if self.g == 0:
            return math.inf
        return math.log1p(self.kappa_z / (2 * self.g * self.c)) / self.s_max


@dataclass
class BoundCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    dist: np.ndarray
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs + SLACK))

    @property
    def violations(self) -> int:
        return int(np.count_nonzero(self.lhs > self.rhs + SLACK))

    def as_tuple(self):
        return self.lhs, self.rhs, self.passed


def measure_kappa(system: CTSystem, z: complex) -> float:
    """Tightest admissible ``kappa_z = 1 / ||W^{1/2} (H - z)^{-1} W^{1/2}||``."""
    if np.any(system.Y):
        raise ValueError("the abstract bound takes Y = 0")
    spec = eigendecompose(system.matrix)
    R = resolvent(spec, z)
    s = np.sqrt(system.W)
    return 1.0 / operator_norm(s[:, None] * R * s[None, :])


def ct_parameters(system: CTSystem, z: complex) -> CTParameters:
    return CTParameters(system.g, system.c, system.s_max, system.W0, measure_kappa(system, z))


def _block_norm(R: np.ndarray, A_set, B_set) -> float:
    return operator_norm(R[np.ix_(list(A_set), list(B_set))])


def verify_abstract_ct(system: CTSystem, z: complex, A_set: Sequence[int], B_set: Sequence[int],
                       ct: CTParameters | None = None):
    """``||chi_A (H - z)^{-1} chi_B|| <= 2/(W0 kappa_z) exp(-eta_z d(A, B))``."""
    violations = []
    if system.W0 <= 0:
        violations.append("W must be strictly positive")
    if system.form_bound_margin() < -SLACK:
        violations.append("relative form bound -cW <= A <= cW fails")
    if np.any(system.Y):
        violations.append("the abstract bound takes Y = 0")
    if violations:
        raise PreconditionError(violations)
    ct = ct or ct_parameters(system, z)
    measured = measure_kappa(system, z)
    if ct.kappa_z > measured * (1 + 1e-12):
        raise PreconditionError([f"kappa_z={ct.kappa_z} exceeds the admissible {measured}"])
    R = resolvent(eigendecompose(system.matrix), z)
    lhs = _block_norm(R, A_set, B_set)
    d = int(system.distances(list(A_set), list(B_set)).min())
    rhs = 2.0 / (ct.W0 * ct.kappa_z) * float(decay_factor(ct.eta_z, d))
    return lhs, rhs, lhs <= rhs + SLACK


def abstract_ct_all_pairs(system: CTSystem, z: complex, ct: CTParameters | None = None) -> BoundCheck:
    """Singleton version of ``verify_abstract_ct`` over every pair of vertices at once."""
    ct = ct or ct_parameters(system, z)
    R = resolvent(eigendecompose(system.matrix), z)
    idx = np.arange(R.shape[0])
    d = system.distances(idx, idx)
    rhs = 2.0 / (ct.W0 * ct.kappa_z) * decay_factor(ct.eta_z, d)
    return BoundCheck(np.abs(R), rhs, d, {"kappa_z": ct.kappa_z, "eta_z": ct.eta_z, "W0": ct.W0})


# -- projected Combes-Thomas --------------------------------------------------

def projected_ct_constants(g: float, c: float, s_max: int, K_cut: float, delta_prime: float):
    """``C = 4/(delta'(1 - cg))`` and ``eta = log(1 + delta'(1 - cg)/(4 K c g)) / s_max``."""
    C = 4.0 / (delta_prime * (1 - c * g))
    eta = math.inf if g == 0 else math.log1p(delta_prime * (1 - c * g) / (4 * K_cut * c * g)) / s_max
    return C, eta


def projected_ct_preconditions(system: CTSystem, E: float, K_cut: float, delta_prime: float) -> list[str]:
    out = []
    cg = system.c * system.g
    if not system.W0 > 0:
        out.append("W must be strictly positive")
    if not system.g < 1 / system.c:
        out.append(f"g={system.g} must be < 1/c={1 / system.c}")
    if not system.W0 < K_cut - delta_prime:
        out.append(f"W0={system.W0} must be < K - delta'={K_cut - delta_prime}")
    if not E <= (1 - cg) * (K_cut - delta_prime) + 1e-12:
        out.append(f"E={E} must be <= (1-cg)(K-delta')={(1 - cg) * (K_cut - delta_prime)}")
    if system.form_bound_margin() < -SLACK:
        out.append("relative form bound -cW <= A <= cW fails")
    if np.any(system.Y < 0):
        out.append("Y must be non-negative")
    return out


def restricted_resolvent(H: np.ndarray, cut: np.ndarray, z: complex) -> np.ndarray:
    """``(chi H chi - z)^{-1}`` on the span of the indices ``cut``."""
    Hc = H[np.ix_(cut, cut)]
    lam, U = np.linalg.eigh(Hc)
    gaps = lam - z
    if np.abs(gaps).min() * MAX_RESOLVENT_NORM < 1:
        raise ValueError(f"z={z} lies (numerically) in the restricted spectrum")
    return (U / gaps) @ U.T


def verify_projected_ct(system: CTSystem, E: float, eps: float, K_cut: float, delta_prime: float,
                        A_set: Sequence[int] | None = None, B_set: Sequence[int] | None = None):
    """Resolvent of the operator compressed to ``{W > K_cut}`` decays like ``C exp(-eta d)``.

    ``A_set``/``B_set`` are indices of the full operator and must lie in the cut;
    ``None`` means every singleton pair of the cut (the result is then a ``BoundCheck``).
    """
    violations = projected_ct_preconditions(system, E, K_cut, delta_prime)
    cut = np.flatnonzero(system.W > K_cut)
    for name, S in (("A", A_set), ("B", B_set)):
        if S is not None and not set(S) <= set(cut.tolist()):
            violations.append(f"{name}_set is not inside the cut")
    if violations:
        raise PreconditionError(violations)
    C, eta = projected_ct_constants(system.g, system.c, system.s_max, K_cut, delta_prime)
    return _cut_check(system.matrix, system.distances, cut, E, eps, C, eta, A_set, B_set)


def _cut_check(H, distances, cut, E, eps, C, eta, A_set, B_set):
    if len(cut) == 0:
        return BoundCheck(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0)), {"C": C, "eta": eta})
    R = restricted_resolvent(H, cut, E + 1j * eps)
    if A_set is None and B_set is None:
        d = distances(cut, cut)
        return BoundCheck(np.abs(R), C * decay_factor(eta, d), d, {"C": C, "eta": eta})
    pos = {int(x): i for i, x in enumerate(cut)}
    A_loc = [pos[int(a)] for a in A_set]
    B_loc = [pos[int(b)] for b in B_set]
    lhs = _block_norm(R, A_loc, B_loc)
    d = int(distances(list(A_set), list(B_set)).min())
    rhs = C * float(decay_factor(eta, d))
    return lhs, rhs, lhs <= rhs + SLACK


def xxz_ct_constants(k: int, delta: float, aniso: float, d_min: int = 2):
    """``C = 4/delta`` and ``mu = log(1 + delta Delta / (2 (D_min + k)))``."""
    C = 4.0 / delta
    mu = math.inf if math.isinf(aniso) else math.log1p(delta * aniso / (2 * (d_min + k)))
    return C, mu


def xxz_cut(sector: SectorOperator, k: int) -> np.ndarray:
    """Indices of configurations with host surface measure ``>= D_min + k``."""
    return np.flatnonzero(sector.degree_full >= sector.d_min + k)


def verify_xxz_ct(sector: SectorOperator, k: int, delta: float, E: float, eps: float,
                  A_set: Sequence[int] | None = None, B_set: Sequence[int] | None = None):
    """XXZ form of the projected bound: cut ``{D_G >= D_min + k}``, ``E <= E_{N,k} - delta``."""
    if delta <= 0:
        raise PreconditionError(["delta must be > 0"])
    d_min = sector.d_min
    E_nk = sector_threshold(k, sector.params.delta, d_min)
    violations = []
    if not E <= E_nk - delta + 1e-12:
        violations.append(f"E={E} must be <= E_(N,k) - delta = {E_nk - delta}")
    cut = xxz_cut(sector, k)
    for name, S in (("A", A_set), ("B", B_set)):
        if S is not None and not set(S) <= set(cut.tolist()):
            violations.append(f"{name}_set is not inside the cut")
    if violations:
        raise PreconditionError(violations)
    C, mu = xxz_ct_constants(k, delta, sector.params.delta, d_min)
    return _cut_check(sector.matrix, sector.distances, cut, E, eps, C, mu, A_set, B_set)


# -- projection decay ------------------------------------------------------------

def lemma_decay_constants(k: int, delta: float, aniso: float, d_min: int = 2):
    """``C_2 = (3 sqrt5 / 2)(D_min + k)^{3/2} / min(1, delta^{3/2})`` and ``mu_2 = mu / 2``."""
    C2 = 1.5 * math.sqrt(5) * (d_min + k) ** 1.5 / min(1.0, delta ** 1.5)
    _, mu = xxz_ct_constants(k, delta, aniso, d_min)
    return C2, mu / 2


def chain_decay_constants(K: int, delta: float, aniso: float):
    """``C_3 = 3 sqrt10 (K+1)^{3/2} / min(1, delta^{3/2})``,
    ``mu_3 = log(1 + delta Delta / (4(K+1))) / 2``."""
    if K < 1 or delta <= 0:
        raise ValueError("need K >= 1 and delta > 0")
    C3 = 3 * math.sqrt(10) * (K + 1) ** 1.5 / min(1.0, delta ** 1.5)
    mu3 = math.inf if math.isinf(aniso) else 0.5 * math.log1p(delta * aniso / (4 * (K + 1)))
    return C3, mu3


def _row_norms(U: np.ndarray, rows: Sequence[int]) -> np.ndarray:
    return np.sqrt((U[list(rows)] ** 2).sum(axis=1))


def verify_projection_decay(sector: SectorOperator, K: int, delta: float,
                            A_set: Sequence[int] | None = None, spec: SpectralData | None = None):
    """Chain form: ``||chi_A chi_[0, E_{K+1} - delta](H)|| <= C_3 exp(-mu_3 d(A, V_{N,K}))``.

    ``A_set=None`` checks every singleton with more than ``K`` clusters and
    returns a ``BoundCheck``; otherwise ``(lhs, rhs, passed)``.
    """
    if delta <= 0:
        raise PreconditionError(["delta must be > 0"])
    configs = sector.configs
    eligible = [i for i, X in enumerate(configs) if cluster_count(X) > K]
    if A_set is not None and not set(A_set) <= set(eligible):
        raise PreconditionError(["A_set must consist of configurations with more than K clusters"])
    spec = spec or eigendecompose(sector)
    E_top = threshold_energy(K + 1, sector.params.delta) - delta
    U = spec.window(0.0, E_top) if E_top >= 0 else spec.eigenvectors[:, :0]
    C3, mu3 = chain_decay_constants(K, delta, sector.params.delta)
    if A_set is None:
        lhs = _row_norms(U, eligible) if U.shape[1] else np.zeros(len(eligible))
        d = np.array([distance_at_most(configs[i], K) for i in eligible])
        return BoundCheck(lhs, C3 * decay_factor(mu3, d), d, {"C3": C3, "mu3": mu3})
    lhs = operator_norm(U[list(A_set)]) if U.shape[1] else 0.0
    d = min(distance_at_most(configs[i], K) for i in A_set)
    rhs = C3 * float(decay_factor(mu3, d))
    return lhs, rhs, lhs <= rhs + SLACK


def verify_lemma_decay(sector: SectorOperator, k: int, delta: float,
                       spec: SpectralData | None = None) -> BoundCheck:
    """General-graph form on every singleton of ``{D_G >= D_min + k}``:
    ``||chi_X chi_[0, E_{N,k} - delta](H)|| <= C_2 exp(-mu_2 d_N(X, V'_{N,k}))``."""
    if delta <= 0:
        raise PreconditionError(["delta must be > 0"])
    d_min = sector.d_min
    spec = spec or eigendecompose(sector)
    E_top = sector_threshold(k, sector.params.delta, d_min) - delta
    U = spec.window(0.0, E_top) if E_top >= 0 else spec.eigenvectors[:, :0]
    cut = xxz_cut(sector, k)
    low = np.flatnonzero(sector.degree_full < d_min + k)
    C2, mu2 = lemma_decay_constants(k, delta, sector.params.delta, d_min)
    lhs = _row_norms(U, cut) if U.shape[1] else np.zeros(len(cut))
    if len(cut) and len(low):
        d = sector.distances(cut, low).min(axis=1)
    else:
        d = np.zeros(len(cut))
    return BoundCheck(lhs, C2 * decay_factor(mu2, d), d, {"C2": C2, "mu2": mu2})


def relative_form_margin(sector: SectorOperator) -> float:
    """``min eig(D' +- A)`` on a sector; non-negative means ``-D' <= A <= D'``."""
    A = sector.adjacency
    D = np.diag(sector.degree_sub.astype(float))
    return float(min(np.linalg.eigvalsh(D + A)[0], np.linalg.eigvalsh(D - A)[0]))

