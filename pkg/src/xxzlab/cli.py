"""Batch runner: ``xxzlab <command> [--flags]``.

Every command resolves its parameters from built-in defaults, then an optional
flat ``key = value`` config file, then command-line flags (flags win).  Results
go to ``--out DIR`` as CSV tables plus ``manifest.txt``; the exit status is 1
when an assertive check fails, 2 on invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .clusters import (a_yk_distance, a_yk_distance_oracle, brute_force_cluster_distance,
                       brute_force_droplets, closest_droplets, closest_k_cluster, cluster_count,
                       distance_to_at_most_K, right_shift_lemma_check)
from .entanglement import (chain_window, entanglement_entropy, reduced_density_matrix, renyi_entropy,
                           sample_subspace_states, theorem6_rhs, trace_alpha_bound_rhs,
                           trace_power, von_neumann_entropy)
from .hamiltonian import (ModelParams, build_full, build_sector, check_delta, inv_delta,
                          ising_eigensystem, sector_threshold, tensor_oracle)
from .graphs import chain
from .ising import (count_closed_form_oracle, count_exact, build_extremal_state, n_kell,
                    asymptotic_ratio, q_moments_mc)
from .spectral import (SLACK, BoundCheck, CTSystem, PreconditionError, abstract_ct_all_pairs,
                       eigendecompose, verify_lemma_decay, verify_projected_ct,
                       verify_projection_decay, verify_xxz_ct)

FIELD_STREAM = 1 << 32  # spawn key of the random-field stream, disjoint from sample indices
U64_MAX = 2 ** 64 - 1


class ConfigError(ValueError):
    pass


# -- parameter parsing -------------------------------------------------------------

def _int(s):
    return int(str(s).strip())


def _float(s):
    return float(str(s).strip())


def _aniso(s):
    v = float(str(s).strip())
    check_delta(v)
    return v


def _list(conv):
    def parse(s):
        if isinstance(s, (list, tuple)):
            return [conv(x) for x in s]
        return [conv(x) for x in str(s).split(",") if x.strip()]
    return parse


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass
class Param:
    conv: Callable
    default: object
    help: str
    check: Callable | None = None  # value -> error message or None


def _pos(v):
    return None if (min(v) if isinstance(v, list) else v) > 0 else "must be > 0"


def _nonneg(v):
    return None if (min(v) if isinstance(v, list) else v) >= 0 else "must be >= 0"


def _chain_size(v):
    return None if 2 <= v <= 12 else "must lie in [2, 12]"


def _alphas(v):
    return None if all(0 < a < 1 for a in v) else "every alpha must lie in (0, 1)"


def _unit(v):
    return None if 0 <= v < 1 else "must lie in [0, 1)"


COMMON = {
    "out": Param(str, "xxzlab-out", "output directory"),
    "seed": Param(_int, 0, "64-bit seed", lambda v: None if 0 <= v <= U64_MAX else "must be a 64-bit unsigned integer"),
    "workers": Param(_int, 1, "worker count", lambda v: None if v >= 1 else "must be >= 1"),
}

FIELD = {
    "field": Param(str, "zero", "zero | random | path to a site,value CSV"),
    "field_scale": Param(_float, 1.0, "random field is uniform on [0, field_scale]", _nonneg),
    "pad": Param(_int, 1, "host padding of the chain", _pos),
}

COMMANDS: dict[str, dict[str, Param]] = {
    "spectrum": {
        "chain": Param(_int, 8, "chain length L", _chain_size),
        "delta": Param(_aniso, 2.0, "anisotropy Delta > 1 (inf allowed)"),
        **FIELD,
    },
    "entanglement-scan": {
        "chain": Param(_int, 12, "chain length L", _chain_size),
        "aniso": Param(_aniso, 2.0, "anisotropy Delta > 1 (inf allowed)"),
        "delta": Param(_float, 0.5, "distance delta of the window top below E_(K+1)", _pos),
        "K": Param(_list(_int), [1, 2], "cluster numbers", _pos),
        "ells": Param(_list(_int), [3, 4, 5, 6], "cut positions"),
        "alphas": Param(_list(_float), [0.1, 0.5, 0.9], "Renyi indices", _alphas),
        "samples": Param(_int, 1000, "random window states per K", _nonneg),
        "bits": Param(_bool, False, "report entropies in bits"),
        **FIELD,
    },
    "ct-decay": {
        "chain": Param(_int, 10, "chain length L", _chain_size),
        "particles": Param(_int, 3, "particle number N", _pos),
        "k": Param(_int, 2, "cut offset k (configurations with D >= D_min + k)", _nonneg),
        "delta": Param(_float, 0.5, "energy margin delta", _pos),
        "aniso": Param(_aniso, 2.0, "anisotropy Delta > 1 (inf allowed)"),
        "eps": Param(_list(_float), [0.0, 0.1, 1.0], "imaginary parts of the spectral parameter", _nonneg),
        "energies": Param(_list(_float), [0.0, 0.5, 2.0], "offsets below the admissible top energy", _nonneg),
        "z": Param(_list(_float), [-1.0], "real spectral parameters below the spectrum (abstract bound)"),
        **FIELD,
    },
    "ising-scan": {
        "kmax": Param(_int, 3, "largest cluster number", _pos),
        "lmin": Param(_int, 1, "smallest ell", _pos),
        "lmax": Param(_int, 200, "largest ell", _pos),
        "construct_max": Param(_int, 2000, "build the extremal state when N_(K,ell) <= this", _nonneg),
        "bits": Param(_bool, False, "report entropies in bits"),
    },
    "ising-mc": {
        "k": Param(_int, 1, "cluster number K", _pos),
        "l": Param(_list(_int), [50], "ell values", _pos),
        "p": Param(_float, 0.5, "probability that a site is available", _unit),
        "samples": Param(_int, 100000, "Monte-Carlo samples", lambda v: None if v >= 100 else "must be >= 100"),
    },
    "cluster-geometry-check": {
        "sites": Param(_int, 12, "configurations live in [1, sites]", _pos),
        "nmax": Param(_int, 7, "largest particle number", _pos),
        "kmax": Param(_int, 3, "largest cluster number", _pos),
        "ell_max": Param(_int, 8, "largest ell for the completion sweeps", _pos),
        "L_max": Param(_int, 12, "largest L for the completion sweeps", _pos),
        "shift_instances": Param(_int, 10000, "random instances for the right-shift check", _nonneg),
    },
}


def parse_config_file(path: str | Path, allowed: dict) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes and underscores are equivalent."""
    out = {}
    text = Path(path).read_text()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "config":
            raise ConfigError(f"{path}:{n}: config files cannot include other config files")
        if key not in allowed:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = (value, f"{path}:{n}")
    return out


def resolve(command: str, cli_values: dict, config_path: str | None = None) -> dict:
    """Defaults < config file < flags, converted and validated field by field."""
    schema = {**COMMON, **COMMANDS[command]}
    raw = {k: (p.default, "default") for k, p in schema.items()}
    if config_path:
        raw.update(parse_config_file(config_path, schema))
    for k, v in cli_values.items():
        if v is not None:
            raw[k] = (v, f"--{k.replace('_', '-')}")
    cfg = {}
    for k, (v, where) in raw.items():
        p = schema[k]
        try:
            val = p.conv(v)
        except ValueError as e:
            raise ConfigError(f"{where}: {k}: {e}") from None
        msg = p.check(val) if p.check else None
        if msg:
            raise ConfigError(f"{where}: {k} {msg}")
        cfg[k] = val
    _cross_checks(command, cfg)
    return cfg


def _cross_checks(command: str, cfg: dict) -> None:
    if command == "ct-decay" and cfg["particles"] > cfg["chain"]:
        raise ConfigError("particles must not exceed chain")
    if command == "entanglement-scan" and not all(1 <= e < cfg["chain"] for e in cfg["ells"]):
        raise ConfigError("every ell must satisfy 1 <= ell < chain")
    if command == "ising-scan" and cfg["lmin"] > cfg["lmax"]:
        raise ConfigError("lmin must not exceed lmax")
    if command == "ising-scan" and math.comb(cfg["lmax"] + 1, 2 * cfg["kmax"]) > 2 ** 63 - 1:
        raise ConfigError("counts exceed the 64-bit range; lower kmax or lmax")
    if command == "cluster-geometry-check":
        if cfg["ell_max"] >= cfg["L_max"]:
            raise ConfigError("ell_max must be < L_max")
        if cfg["nmax"] > cfg["sites"]:
            raise ConfigError("nmax must not exceed sites")


# -- results -------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([fmt(x) for x in r])
        return buf.getvalue()


@dataclass
class Result:
    tables: list = field(default_factory=list)
    checks: list = field(default_factory=list)  # (name, instances, failures)
    warnings: list = field(default_factory=list)

    def check(self, name: str, instances: int, failures: int) -> None:
        self.checks.append((name, int(instances), int(failures)))

    @property
    def ok(self) -> bool:
        return all(f == 0 for _, _, f in self.checks)

    def table(self, name: str) -> Table:
        return next(t for t in self.tables if t.name == name)

    def checks_table(self) -> Table:
        return Table("checks", ["check", "instances", "failures", "pass"],
                     [[n, i, f, f == 0] for n, i, f in self.checks])


def _field_values(cfg: dict, L: int) -> list[float]:
    kind = cfg["field"]
    if kind == "zero":
        return [0.0] * L
    if kind == "random":
        rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"], spawn_key=(FIELD_STREAM,)))
        return list(cfg["field_scale"] * rng.random(L))
    return read_field_csv(kind, L)


def read_field_csv(path: str | Path, L: int) -> list[float]:
    """``site,value`` rows (optional header); missing sites are 0."""
    vals = [0.0] * L
    with open(path, newline="") as fh:
        for n, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                site, value = int(row[0]), float(row[1])
            except (ValueError, IndexError):
                if n == 1:
                    continue  # header
                raise ConfigError(f"{path}:{n}: expected 'site,value'") from None
            if not 1 <= site <= L:
                raise ConfigError(f"{path}:{n}: site {site} outside [1, {L}]")
            if value < 0:
                raise ConfigError(f"{path}:{n}: field must be non-negative")
            vals[site - 1] = value
    return vals


def _map(fn, items, workers: int, processes: bool = False) -> list:
    """Ordered map; the result never depends on ``workers``."""
    if workers <= 1:
        return [fn(x) for x in items]
    pool = ProcessPoolExecutor if processes else ThreadPoolExecutor
    with pool(workers) as ex:
        return list(ex.map(fn, items))


# -- commands ------------------------------------------------------------------------

def run_spectrum(cfg: dict) -> Result:
    L, aniso = cfg["chain"], cfg["delta"]
    V = _field_values(cfg, L)
    params = ModelParams.chain_field(aniso, V)
    sectors = build_full(chain(L, cfg["pad"]), params, workers=cfg["workers"])
    spectra = _map(lambda s: np.linalg.eigvalsh(s.matrix), sectors, cfg["workers"])
    res = Result()
    t = Table("spectrum", ["N", "index", "eigenvalue"])
    for s, ev in zip(sectors, spectra):
        t.rows += [[s.N, i, e] for i, e in enumerate(ev)]
    res.tables.append(t)
    allev = np.sort(np.concatenate(spectra))
    beta = 0.5 * (1 - inv_delta(aniso))
    checks = Table("spectrum_checks", ["check", "value", "reference"])
    if L <= 12:
        diff = float(np.abs(allev - np.linalg.eigvalsh(tensor_oracle(L, params))).max())
        checks.rows.append(["oracle_max_abs_diff", diff, 1e-10])
        res.check("oracle equivalence", 1, diff > 1e-10)
    zeros = int(np.count_nonzero(np.abs(allev) <= 1e-9))
    checks.rows.append(["zero_multiplicity", zeros, 1])
    checks.rows.append(["min_eigenvalue", allev[0], 0.0])
    res.check("ground state 0 simple", 1, zeros != 1 or allev[0] < -1e-9)
    gap = float(allev[np.abs(allev) > 1e-9].min()) if len(allev) > 1 else math.inf
    checks.rows.append(["gap", gap, beta])
    res.check("gap >= (1 - 1/Delta)/2", 1, gap < beta - SLACK)
    if math.isinf(aniso):
        ising = np.sort([e for _, e in ising_eigensystem(L, V)])
        diff = float(np.abs(ising - allev).max())
        checks.rows.append(["ising_max_abs_diff", diff, 1e-12])
        res.check("Ising-limit eigenvalues", 1, diff > 1e-12)
    res.tables.append(checks)
    return res


def run_entanglement_scan(cfg: dict) -> Result:
    L, aniso, delta = cfg["chain"], cfg["aniso"], cfg["delta"]
    params = ModelParams.chain_field(aniso, _field_values(cfg, L))
    sectors = build_full(chain(L, cfg["pad"]), params, workers=cfg["workers"])
    spectra = _map(eigendecompose, sectors, cfg["workers"])
    unit = math.log(2) if cfg["bits"] else 1.0
    res = Result()
    main = Table("entanglement", ["L", "ell", "N_window", "K", "delta", "alpha", "sample_id",
                                  "entropy_vn", "entropy_renyi", "bound_rhs", "pass"])
    trace = Table("trace_bound", ["L", "ell", "K", "delta", "alpha", "sample_id",
                                  "trace_alpha", "trace_rhs", "pass"])
    ratios = Table("ratios", ["L", "ell", "K", "delta", "states", "max_entropy_vn", "log_ell",
                              "ratio", "reference_2Kminus1"])
    fails = n = 0
    for K in cfg["K"]:
        window = chain_window(sectors, K, delta, spectra)
        if window.rank == 0:
            res.warnings.append(f"K={K}: empty spectral window [0, E_(K+1) - delta]; no samples")
            continue
        states = sample_subspace_states(window, cfg["samples"], cfg["seed"])
        bounds = {(ell, a): (theorem6_rhs(a, K, ell, delta, aniso),
                             trace_alpha_bound_rhs(None, a, K, delta, aniso, ell, L))
                  for ell in cfg["ells"] for a in cfg["alphas"]}

        def evaluate(item):
            sid, psi = item
            rows = []
            for ell in cfg["ells"]:
                rho = reduced_density_matrix(psi, ell, L)
                vn = von_neumann_entropy(rho)
                for a in cfg["alphas"]:
                    ren, tr = renyi_entropy(rho, a), trace_power(rho, a)
                    rhs, trhs = bounds[(ell, a)]
                    rows.append((ell, a, sid, vn, ren, rhs, tr, trhs))
            return rows

        per_state = _map(evaluate, list(enumerate(states)), cfg["workers"])
        best: dict = {}
        for rows in per_state:
            for ell, a, sid, vn, ren, rhs, tr, trhs in rows:
                ok_r, ok_t = ren <= rhs + SLACK, tr <= trhs + SLACK
                main.rows.append([L, ell, window.rank, K, delta, a, sid, vn / unit, ren / unit,
                                  rhs / unit, ok_r and ok_t])
                trace.rows.append([L, ell, K, delta, a, sid, tr, trhs, ok_t])
                fails += not (ok_r and ok_t)
                n += 1
                best[ell] = max(best.get(ell, 0.0), vn)
        for ell in cfg["ells"]:
            ratios.rows.append([L, ell, K, delta, len(states), best[ell] / unit, math.log(ell),
                                best[ell] / math.log(ell) if ell > 1 else None, 2 * K - 1])
    res.tables += [main, trace, ratios]
    res.check("entanglement bounds", n, fails)
    return res


def _grouped_rows(chk: BoundCheck, N, k, delta, bound, E, eps) -> tuple[list, int, int]:
    lhs, rhs, d = (np.asarray(x, dtype=float).ravel() for x in (chk.lhs, chk.rhs, chk.dist))
    rows, fails = [], 0
    for dist in np.unique(d):
        sel = d == dist
        bad = int(np.count_nonzero(lhs[sel] > rhs[sel] + SLACK))
        fails += bad
        rows.append([N, k, delta, int(dist) if np.isfinite(dist) else dist, float(lhs[sel].max()),
                     float(rhs[sel].min()), bad == 0, bound, E, eps, int(sel.sum())])
    return rows, fails, int(lhs.size)


def run_ct_decay(cfg: dict) -> Result:
    L, N, k, delta, aniso = cfg["chain"], cfg["particles"], cfg["k"], cfg["delta"], cfg["aniso"]
    params = ModelParams.chain_field(aniso, _field_values(cfg, L))
    sector = build_sector(chain(L, cfg["pad"]), N, params)
    spec = eigendecompose(sector)
    res = Result()
    t = Table("ct", ["N", "K", "delta", "dist", "lhs", "rhs", "pass", "bound", "E", "eps", "pairs"])
    top = sector_threshold(k, aniso, sector.d_min) - delta
    tasks = [("xxz", top - o, e) for o in cfg["energies"] for e in cfg["eps"]]
    tasks += [("projected", top - o, e) for o in cfg["energies"] for e in cfg["eps"]]
    tasks += [("abstract", z, 0.0) for z in cfg["z"]]
    diag = CTSystem.from_sector(sector, "diagonal")
    internal = CTSystem.from_sector(sector, "internal")
    K_cut = 0.5 * (sector.d_min + k)
    beta2 = 1 - inv_delta(aniso)

    def run(task):
        bound, E, eps = task
        try:
            if bound == "xxz":
                return verify_xxz_ct(sector, k, delta, E, eps)
            if bound == "projected":
                return verify_projected_ct(internal, E, eps, K_cut, delta / beta2)
            if diag.form_bound_margin() < -SLACK or diag.W0 <= 0:
                raise PreconditionError(["relative form bound fails"])
            if E >= spec.eigenvalues[0]:
                raise PreconditionError([f"z={E} is not below the spectrum"])
            return abstract_ct_all_pairs(diag, E)
        except PreconditionError as e:
            return e

    counts: dict = {}
    for task, chk in zip(tasks, _map(run, tasks, cfg["workers"])):
        bound, E, eps = task
        if isinstance(chk, PreconditionError):
            res.warnings.append(f"{bound} E={E} eps={eps} skipped: {'; '.join(chk.violations)}")
            continue
        rows, fails, pairs = _grouped_rows(chk, N, k, delta, bound, E, eps)
        t.rows += rows
        inst, f = counts.get(bound, (0, 0))
        counts[bound] = (inst + pairs, f + fails)
    decay_rows = []
    chk = verify_lemma_decay(sector, k, delta, spec)
    rows, fails, pairs = _grouped_rows(chk, N, k, delta, "projection_decay", top, 0.0)
    decay_rows += rows
    counts["projection_decay"] = (pairs, fails)
    if k >= 2 and k % 2 == 0:
        K = k // 2
        chk = verify_projection_decay(sector, K, delta, spec=spec)
        rows, fails, pairs = _grouped_rows(chk, N, K, delta, "chain_projection_decay",
                                           sector_threshold(k, aniso) - delta, 0.0)
        decay_rows += rows
        counts["chain_projection_decay"] = (pairs, fails)
    t.rows += decay_rows
    res.tables.append(t)
    for bound, (inst, f) in counts.items():
        res.check(bound, inst, f)
    return res


def run_ising_scan(cfg: dict) -> Result:
    unit = math.log(2) if cfg["bits"] else 1.0
    res = Result()
    t = Table("ising_scan", ["K", "ell", "exact_count", "closed_form", "entropy",
                             "bound_2Kminus1_ratio", "n_kell", "entropy_source", "asymptotic_ratio"])
    mism = constructed_fail = constructed = n = 0
    for K in range(1, cfg["kmax"] + 1):
        for ell in range(cfg["lmin"], cfg["lmax"] + 1):
            ex, cf = count_exact(K, ell), count_closed_form_oracle(K, ell)
            mism += ex != cf
            n += 1
            entropy = ratio = nk = None
            source = ""
            if ell >= 2 * K:
                nk = n_kell(K, ell)
                entropy = math.log(nk + 1)
                source = "count"
                if nk <= cfg["construct_max"]:
                    got = entanglement_entropy(build_extremal_state(K, ell, ell + nk), ell, ell + nk)
                    constructed += 1
                    constructed_fail += abs(got - entropy) > 1e-10
                    entropy, source = got, "constructed"
                if ell > 1:
                    ratio = entropy / ((2 * K - 1) * math.log(ell))
            t.rows.append([K, ell, ex, cf, None if entropy is None else entropy / unit, ratio, nk,
                           source, float(asymptotic_ratio(K, ell))])
    res.tables.append(t)
    res.check("recursion == closed form", n, mism)
    res.check("extremal entropy == log(N_(K,ell) + 1)", constructed, constructed_fail)
    return res


def run_ising_mc(cfg: dict) -> Result:
    res = Result()
    t = Table("ising_mc", ["K", "ell", "p", "samples", "mean", "exact_mean", "variance",
                           "var_over_l_2Km1", "seed", "stderr", "z_score"])
    fails = 0
    K = cfg["k"]
    for ell in cfg["l"]:
        m = q_moments_mc(K, ell, cfg["p"], cfg["samples"], cfg["seed"], cfg["workers"])
        ok = abs(m.mean - m.exact_mean) <= 3 * m.stderr if m.stderr > 0 else m.mean == m.exact_mean
        fails += not ok
        t.rows.append([K, ell, cfg["p"], m.samples, m.mean, m.exact_mean, m.variance,
                       m.var_over(ell, K), cfg["seed"], m.stderr, m.z_score])
    res.tables.append(t)
    res.check("mean within 3 standard errors", len(cfg["l"]), fails)
    return res


def _geometry_size(args):
    n, sites, kmax = args
    rows = []
    for X in combinations(range(1, sites + 1), n):
        d1, drops = closest_droplets(X)
        bd, bdrops = brute_force_droplets(X)
        ok_drop = d1 == bd and sorted(s.sites for s in drops) == bdrops
        if n % 2 == 1:
            ok_drop = ok_drop and len(drops) == 1 and drops[0].center == X[n // 2]
        ok_k = True
        for k in range(1, min(kmax, n) + 1):
            dec = closest_k_cluster(X, k)
            ok_k &= (dec.distance == brute_force_cluster_distance(X, k)
                     and cluster_count(dec.realized) == k and len(dec.realized) == n
                     and sum(abs(a - b) for a, b in zip(X, dec.realized)) == dec.distance)
        prev = math.inf
        mono = True
        for K in range(1, kmax + 1):
            d, _ = distance_to_at_most_K(X, K)
            mono &= d <= prev
            prev = d
        rows.append((ok_drop, ok_k, mono))
    return rows


def _completion_sweep(args):
    ell, L, kmax = args
    ident = mono = inst = 0
    for j in range(1, ell):
        for Y in combinations(range(1, ell + 1), j):
            for K in range(1, kmax + 1):
                ds = [a_yk_distance(Y, k, K, ell, L) for k in range(1, L - ell + 1)]
                orc = [a_yk_distance_oracle(Y, k, K, ell, L) for k in range(1, L - ell + 1)]
                inst += 1
                ident += ds != orc
                mono += any(b < a for a, b in zip(ds, ds[1:]))
    return inst, ident, mono


def run_cluster_geometry_check(cfg: dict) -> Result:
    res = Result()
    sites, nmax, kmax = cfg["sites"], cfg["nmax"], cfg["kmax"]
    per_n = _map(_geometry_size, [(n, sites, kmax) for n in range(1, nmax + 1)],
                 cfg["workers"], processes=True)
    rows = [r for part in per_n for r in part]
    res.check("closest droplets == brute force", len(rows), sum(not r[0] for r in rows))
    res.check("closest k-cluster == brute force", len(rows), sum(not r[1] for r in rows))
    res.check("distance to <= K clusters non-increasing in K", len(rows), sum(not r[2] for r in rows))
    pairs = [(ell, L, kmax) for ell in range(2, cfg["ell_max"] + 1)
             for L in range(ell + 1, cfg["L_max"] + 1)]
    sweeps = _map(_completion_sweep, pairs, cfg["workers"], processes=True)
    inst = sum(s[0] for s in sweeps)
    res.check("completion distance == exhaustive minimum over Z", inst, sum(s[1] for s in sweeps))
    res.check("completion distance non-decreasing in k", inst, sum(s[2] for s in sweeps))
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    shift_fail = done = 0
    while done < cfg["shift_instances"]:
        n = int(rng.integers(2, nmax + 1))
        V = tuple(sorted(int(x) for x in rng.choice(np.arange(1, sites + 1), n, replace=False)))
        if cluster_count(V) < 2:
            continue
        for K in range(1, cluster_count(V) + 1):
            shift_fail += not right_shift_lemma_check(V, K)
        done += 1
    res.check("right-most shift does not increase the distance", done, shift_fail)
    res.tables.append(Table("geometry", ["check", "instances", "failures", "pass"],
                            [[c, i, f, f == 0] for c, i, f in res.checks]))
    return res


RUNNERS = {
    "spectrum": run_spectrum,
    "entanglement-scan": run_entanglement_scan,
    "ct-decay": run_ct_decay,
    "ising-scan": run_ising_scan,
    "ising-mc": run_ising_mc,
    "cluster-geometry-check": run_cluster_geometry_check,
}


def run(command: str, cfg: dict) -> Result:
    return RUNNERS[command](cfg)


def write_outputs(command: str, cfg: dict, res: Result, elapsed: float) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    for t in res.tables + [res.checks_table()]:
        (out / f"{t.name}.csv").write_text(t.to_csv())
    lines = [f"command = {command}", f"version = {__version__}",
             f"timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}", f"elapsed_seconds = {elapsed:.3f}"]
    lines += [f"{k} = {','.join(map(fmt, v)) if isinstance(v, list) else fmt(v)}" for k, v in sorted(cfg.items())]
    lines += [f"warning = {w}" for w in res.warnings]
    lines += [f"check = {n}: {i - f}/{i} pass" for n, i, f in res.checks]
    lines.append(f"status = {'pass' if res.ok else 'FAIL'}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xxzlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value file (flags override it)")
        for key, prm in {**COMMON, **schema}.items():
            default = prm.default
            shown = ",".join(map(str, default)) if isinstance(default, list) else default
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                           help=f"{prm.help} (default {shown})")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config = args.pop("config")
    try:
        cfg = resolve(command, args, config)
    except ConfigError as e:
        print(f"xxzlab {command}: invalid configuration: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"xxzlab {command}: {e}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        res = run(command, cfg)
    except ConfigError as e:
        print(f"xxzlab {command}: invalid configuration: {e}", file=sys.stderr)
        return 2
    out = write_outputs(command, cfg, res, time.perf_counter() - t0)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for n, i, f in res.checks:
        print(f"{'PASS' if f == 0 else 'FAIL'}  {n}: {i - f}/{i}")
    print(f"results in {out}")
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
