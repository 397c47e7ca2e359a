"""Experiment driver: configured, reproducible runs with CSV/JSON outputs.

Usage: polyspec <kind> [--config cfg.json] [--seed N] [--workers K]
[--out DIR] [--param key=value ...].  Exit code 0 when all configured
statistical checks pass, 2 when any fails, 1 on configuration or runtime
errors.  Identical configs produce byte-identical outputs regardless of
worker count: realizations are split into fixed chunks consumed by a thread
pool and merged in index order, and every realization draws from its own
counter-based substream.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import kstest

from . import __version__
from .model import (PolymerModel, model_from_dict, anderson_preset,
                    potentials_for_sites_batch)
from .transfer import find_critical_energies, expansion_coeffs, _lyapunov_gammas
from .statistics import (pool_spectra, EmpiricalIDS, ids_at_critical,
                         dos_at_critical, les_ensemble, gap_statistics,
                         counting_statistics, clock_spacing_statistic,
                         uniformity_test, holder_probe, minami_probe)
from .prufer import free_phase_batch, angle_map_m
from .transport import transport_exponent

__all__ = ["ExperimentConfig", "RunReport", "validate", "run", "main", "KINDS"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: dict
    params: dict
    seed: int
    workers: int
    out: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "model": self.model, "params": self.params,
                "seed": self.seed, "workers": self.workers, "out": self.out}

    def semantic_dict(self) -> dict:
        """The fields that determine the results; workers and out do not."""
        return {"kind": self.kind, "model": self.model, "params": self.params,
                "seed": self.seed}


@dataclass(frozen=True)
class RunReport:
    config: dict
    config_hash: str
    version: str
    statistics: dict
    passes: dict
    passed: bool
    wall_seconds: float
    files: list


def _config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.semantic_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows, config_hash: str) -> None:
    lines = [f"# config_hash={config_hash}", ",".join(header)]
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _chunked(total: int, chunk: int, fn, workers: int) -> list:
    """Apply fn(start, stop) over fixed chunks; merge preserves chunk order."""
    spans = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if workers <= 1 or len(spans) <= 1:
        return [fn(*span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda sp: fn(*sp), spans))


# ---------------------------------------------------------------------------
# defaults and validation

_COMMON_DEFAULTS = {"seed": 20240801, "workers": 1, "out": "polyspec-out"}

_KIND_DEFAULTS = {
    "critical": {
        "model": {"preset": "dimer", "V": 0.5, "p": 0.5},
        "params": {"search": [-3.0, 3.0], "grid": 20001, "tol": 1e-9,
                   "irr_k_max": 64},
    },
    "lyapunov": {
        "model": {"preset": "dimer", "V": 0.5, "p": 0.5},
        "params": {"energies": [0.5, 0.8], "steps": 1000000, "realizations": 32},
    },
    "ids": {
        "model": {"preset": "dimer", "V": 0.7071067811865476, "p": 0.5},
        "params": {"L_ids": 2000, "realizations": 500, "probe_energies": None,
                   "branch_tolerance": 0.01, "symmetry_tolerance": 0.01},
    },
    "les-poisson": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        # the IDS pool must use the same box size as the LES boxes: finite-size
        # IDS corrections are O(1/L) and shift unfolded atoms by O(1) otherwise
        "params": {"E0": 1.2, "L": 4000, "realizations": 1000, "window_atoms": 12,
                   "ids_L": 4000, "ids_realizations": 1200, "ks_threshold": 0.05,
                   "count_intervals": [[-0.5, 0.5], [1.5, 2.5]],
                   "chi2_pvalue_min": 0.01, "covariance_tolerance": 0.05},
    },
    "les-clock": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"L": 20000, "realizations": 200, "window_atoms": 24,
                   "mean_band": [0.95, 1.05]},
    },
    "clock-spacing": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"L_list": [5000, 10000, 20000], "realizations": 200,
                   "j_max": 20, "mean_band": [0.95, 1.05]},
    },
    "uniformity": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"L": 10000, "realizations": 2000, "ks_threshold": 0.05},
    },
    "psi-convergence": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"L_list": [1000, 10000, 100000], "realizations": 20,
                   "x_range": [-5.0, 5.0], "x_points": 51},
    },
    "sharpness": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"delta": 0.6, "L": 20000, "realizations": 200, "j_max": 20,
                   "mean_band": [0.9, 1.1], "control_E0": 1.2,
                   "control_L": 4000, "control_realizations": 500,
                   "control_window_atoms": 10, "ids_L": 4000,
                   "ids_realizations": 1200, "ks_threshold": 0.05},
    },
    "minami-probe": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"L": 10000, "beta": 0.7, "gamma": 1.0, "c2": 1.0,
                   "realizations": 2000, "E0": 1.2},
    },
    "holder-probe": {
        "model": {"preset": "dimer", "V": 0.6, "p": 0.5},
        "params": {"E0": 1.2, "scales": [2.0 ** -k for k in range(4, 10)],
                   "ids_L": 2000, "ids_realizations": 200},
    },
    "transport": {
        "model": {"preset": "dimer", "V": 0.5, "p": 0.5},
        "params": {"q": 2.0, "box_radius": 2000,
                   "T_grid": [50.0, 80.0, 125.0, 200.0, 300.0, 400.0],
                   "critical_window": [-0.6, 0.6], "localized_window": [1.0, 1.6],
                   "realizations": 6, "quadrature_points": 800,
                   "averaging": "cesaro", "critical_slope_min": 1.0,
                   "localized_slope_max": 0.2, "free_slope_tolerance": 0.1,
                   "free_box_radius": 1000, "free_T_grid": [20.0, 40.0, 60.0, 80.0, 100.0]},
    },
}

KINDS = tuple(sorted(_KIND_DEFAULTS))


def build_config(kind: str, raw: dict) -> ExperimentConfig:
    if kind not in _KIND_DEFAULTS:
        raise ConfigError(f"unknown kind {kind!r}; available: {list(KINDS)}")
    defaults = _KIND_DEFAULTS[kind]
    params = dict(defaults["params"])
    params.update(raw.get("params", {}))
    return ExperimentConfig(
        kind=kind,
        model=raw.get("model", defaults["model"]),
        params=params,
        seed=int(raw.get("seed", _COMMON_DEFAULTS["seed"])),
        workers=int(raw.get("workers", _COMMON_DEFAULTS["workers"])),
        out=str(raw.get("out", _COMMON_DEFAULTS["out"])),
    )


def validate(config: ExperimentConfig) -> list[str]:
    """Schema and cross-field diagnostics; an empty list means valid."""
    diags = []
    if config.kind not in _KIND_DEFAULTS:
        diags.append(f"kind: unknown {config.kind!r}; available: {list(KINDS)}")
        return diags
    try:
        model_from_dict(config.model)
    except (ValueError, TypeError) as e:
        diags.append(f"model: {e}")
    known = set(_KIND_DEFAULTS[config.kind]["params"])
    for key in config.params:
        if key not in known:
            diags.append(f"params.{key}: unknown parameter for kind {config.kind!r}")
    p = config.params
    if config.kind == "sharpness" and not p.get("delta", 1.0) > 0.5:
        diags.append("params.delta: delta must exceed 1/2")
    if config.kind == "minami-probe":
        if not (0.0 < p.get("beta", 0.5) < 1.0):
            diags.append("params.beta: beta must lie in (0, 1)")
        if not (0.0 < p.get("gamma", 1.0) <= 1.0):
            diags.append("params.gamma: gamma must lie in (0, 1]")
    for key in ("realizations", "L", "L_ids", "steps", "grid"):
        if key in p and p[key] is not None and int(p[key]) < 1:
            diags.append(f"params.{key}: must be a positive integer")
    if config.workers < 1:
        diags.append("workers: must be >= 1")
    return diags


# ---------------------------------------------------------------------------
# experiment implementations: each returns (stats, passes, tables)

def _single_report(model: PolymerModel, search, energy_hint: float | None = None):
    reports = find_critical_energies(model, search=search)
    if not reports:
        raise ConfigError("model has no critical energy in the search interval")
    if energy_hint is None:
        return max(reports, key=lambda r: r.energy)
    return min(reports, key=lambda r: abs(r.energy - energy_hint))


def _exp_critical(model, params, seed, workers):
    reports = find_critical_energies(model, search=tuple(params["search"]),
                                     grid=int(params["grid"]), tol=params["tol"],
                                     irr_k_max=int(params["irr_k_max"]))
    rows, irr_rows, stats = [], [], []
    for rep in reports:
        coeffs = expansion_coeffs(model, rep)
        n_c = dos_at_critical(coeffs, model)
        N_c = ids_at_critical(rep, model)
        rows.append((rep.energy, rep.kind_plus, rep.kind_minus, rep.eta_plus,
                     rep.eta_minus, rep.commutator_norm, rep.residual,
                     coeffs.d_plus, coeffs.d_minus, n_c, N_c))
        irr_rows.extend((rep.energy, k, m) for k, m in rep.irrationality_violations)
        stats.append({"energy": rep.energy, "eta_plus": rep.eta_plus,
                      "eta_minus": rep.eta_minus, "dos": n_c, "ids": N_c,
                      "irrationality_violations": rep.irrationality_violations})
    tables = {
        "critical_energies": (["energy", "kind_plus", "kind_minus", "eta_plus",
                               "eta_minus", "commutator_norm", "residual",
                               "d_plus", "d_minus", "dos_critical", "ids_critical"],
                              rows),
        "irrationality": (["energy", "k", "modulus"], irr_rows),
    }
    return {"reports": stats, "count": len(reports)}, {}, tables


def _exp_lyapunov(model, params, seed, workers):
    steps = int(params["steps"])
    R = int(params["realizations"])
    rows, stats = [], {}
    for E in params["energies"]:
        parts = _chunked(R, 8, lambda s, t, E=E: _lyapunov_gammas(
            model, float(E), steps, range(s, t), seed), workers)
        gammas = np.concatenate(parts)
        g, se = float(gammas.mean()), float(gammas.std(ddof=1) / np.sqrt(R))
        rows.append((E, g, se, steps, R))
        stats[str(E)] = {"gamma": g, "stderr": se}
    return stats, {}, {"lyapunov": (["energy", "gamma", "stderr", "steps",
                                     "realizations"], rows)}


def _exp_ids(model, params, seed, workers):
    R = int(params["realizations"])
    L = int(params["L_ids"])
    parts = _chunked(R, 32, lambda s, t: pool_spectra(model, L, seed, range(s, t)),
                     workers)
    pooled = np.sort(np.concatenate(parts))
    ids = EmpiricalIDS(pooled=pooled, total_count=pooled.size)
    grid = np.linspace(pooled[0], pooled[-1], 513)
    curve_rows = [(float(E), float(ids.evaluate(E))) for E in grid]
    sym_grid = np.linspace(0.0, float(np.abs(pooled).max()), 129)
    sym_err = float(np.abs(ids.evaluate(sym_grid) + ids.evaluate(-sym_grid) - 1.0).max())
    reports = find_critical_energies(model)
    probe_rows = []
    branch_err = 0.0
    for rep in reports:
        formula = ids_at_critical(rep, model)
        emp = float(ids.evaluate(rep.energy))
        probe_rows.append((rep.energy, emp, formula))
        branch_err = max(branch_err, abs(emp - formula))
    extra = params.get("probe_energies") or []
    probe_rows.extend((float(E), float(ids.evaluate(E)), float("nan")) for E in extra)
    stats = {"pooled_count": int(pooled.size), "symmetry_error": sym_err,
             "branch_error": branch_err,
             "probes": [{"energy": r[0], "empirical": r[1], "formula": r[2]}
                        for r in probe_rows]}
    passes = {}
    if reports:
        passes["branch_consistency"] = branch_err <= params["branch_tolerance"]
    if abs(model.p_plus - 0.5) < 1e-12:
        passes["symmetry"] = sym_err <= params["symmetry_tolerance"]
    tables = {"ids_curve": (["energy", "N"], curve_rows),
              "ids_probes": (["energy", "N_empirical", "N_formula"], probe_rows)}
    return stats, passes, tables


def _build_ids(model, params, seed, workers):
    R = int(params["ids_realizations"])
    L = int(params["ids_L"])
    # the IDS pool draws from a shifted substream block so it stays
    # independent of the LES realizations
    parts = _chunked(R, 32, lambda s, t: pool_spectra(
        model, L, seed, range(10 ** 6 + s, 10 ** 6 + t)), workers)
    pooled = np.sort(np.concatenate(parts))
    return EmpiricalIDS(pooled=pooled, total_count=pooled.size)


def _gap_rows(samples):
    rows = []
    for s in samples:
        for g in np.diff(s.atoms):
            rows.append((s.realization_index, float(g)))
    return rows


def _exp_les_poisson(model, params, seed, workers):
    ids = _build_ids(model, params, seed, workers)
    R = int(params["realizations"])
    L = int(params["L"])
    E0 = float(params["E0"])
    parts = _chunked(R, 256, lambda s, t: les_ensemble(
        model, E0, L, t - s, seed, window_atoms=int(params["window_atoms"]),
        ids=ids, realization_offset=s), workers)
    samples = [x for part in parts for x in part]
    gs = gap_statistics(samples)
    cs = counting_statistics(samples, params["count_intervals"])
    cov_off = float(cs.count_covariance[0, 1]) if len(cs.intervals) > 1 else 0.0
    stats = {"num_samples": len(samples), "num_gaps": int(gs.gaps.size),
             "gap_mean": gs.mean, "ks_vs_exp1": gs.ks_vs_exp1,
             "frac_near_one": gs.frac_near_one,
             "chi2_pvalues": cs.chi2_pvalues.tolist(),
             "count_covariance": cov_off}
    passes = {"ks_exp1": gs.ks_vs_exp1 < params["ks_threshold"],
              "counting_chi2": bool(np.all(cs.chi2_pvalues > params["chi2_pvalue_min"])),
              "count_covariance": abs(cov_off) <= params["covariance_tolerance"]}
    atom_rows = [(s.realization_index, float(a)) for s in samples for a in s.atoms]
    count_rows = [(s.realization_index, iv[0], iv[1], int(cs.counts[i, j]))
                  for i, s in enumerate(samples) for j, iv in enumerate(cs.intervals)]
    tables = {"gaps": (["realization", "gap"], _gap_rows(samples)),
              "atoms": (["realization", "atom"], atom_rows),
              "counts": (["realization", "interval_lo", "interval_hi", "count"],
                         count_rows)}
    return stats, passes, tables


def _exp_les_clock(model, params, seed, workers):
    report = _single_report(model, (-3.0, 3.0))
    if report.irrationality_violations:
        warnings.warn("irrationality condition fails for this model; "
                      "clock statistics may not converge", stacklevel=2)
    R = int(params["realizations"])
    parts = _chunked(R, 256, lambda s, t: les_ensemble(
        model, report.energy, int(params["L"]), t - s, seed,
        window_atoms=int(params["window_atoms"]), report=report,
        realization_offset=s), workers)
    samples = [x for part in parts for x in part]
    gs = gap_statistics(samples)
    lo, hi = params["mean_band"]
    stats = {"critical_energy": report.energy, "num_gaps": int(gs.gaps.size),
             "gap_mean": gs.mean, "ks_vs_exp1": gs.ks_vs_exp1,
             "frac_near_one": gs.frac_near_one,
             "irrationality_violations": report.irrationality_violations}
    passes = {"mean_in_band": lo <= gs.mean <= hi}
    atom_rows = [(s.realization_index, float(a)) for s in samples for a in s.atoms]
    tables = {"gaps": (["realization", "gap"], _gap_rows(samples)),
              "atoms": (["realization", "atom"], atom_rows)}
    return stats, passes, tables


def _exp_clock_spacing(model, params, seed, workers):
    report = _single_report(model, (-3.0, 3.0))
    R = int(params["realizations"])
    j_max = int(params["j_max"])
    rows = []
    per_size = {}
    for L in params["L_list"]:
        parts = _chunked(R, 256, lambda s, t, L=L: clock_spacing_statistic(
            model, report, int(L), t - s, j_max, seed, realization_offset=s),
            workers)
        gaps = np.concatenate([p[0].rescaled_gaps for p in parts])
        reals = np.concatenate([p[1]["realization_ids"] for p in parts])
        summary = {"mean": float(gaps.mean()), "variance": float(gaps.var(ddof=1)),
                   "frac_in_band": float(np.mean(np.abs(gaps - 1.0) <= 0.1)),
                   "num_gaps": int(gaps.size)}
        per_size[str(int(L))] = summary
        rows.extend((int(L), int(r), float(g)) for r, g in zip(reals, gaps))
    lo, hi = params["mean_band"]
    sizes = [str(int(L)) for L in params["L_list"]]
    variances = [per_size[s]["variance"] for s in sizes]
    largest = per_size[sizes[-1]]
    passes = {"mean_in_band": lo <= largest["mean"] <= hi,
              "variance_decreasing": all(a > b for a, b in zip(variances, variances[1:]))}
    stats = {"critical_energy": report.energy, "per_size": per_size}
    return stats, passes, {"spacing": (["L_sites", "realization", "gap"], rows)}


def _exp_uniformity(model, params, seed, workers):
    report = _single_report(model, (-3.0, 3.0))
    R = int(params["realizations"])
    parts = _chunked(R, 256, lambda s, t: uniformity_test(
        model, report, int(params["L"]), t - s, seed, realization_offset=s),
        workers)
    phis = np.concatenate([p["phis"] for p in parts])
    ks = float(kstest(phis / np.pi, "uniform").statistic)
    stats = {"critical_energy": report.energy, "ks_statistic": ks,
             "num_realizations": R,
             "irrationality_violations": report.irrationality_violations}
    passes = {"ks_uniform": ks < params["ks_threshold"]}
    rows = [(r, float(phi / np.pi)) for r, phi in enumerate(phis)]
    return stats, passes, {"phis": (["realization", "phi_over_pi"], rows)}


def _exp_psi_convergence(model, params, seed, workers):
    report = _single_report(model, (-3.0, 3.0))
    n_Ec = dos_at_critical(expansion_coeffs(model, report), model)
    xs = np.linspace(params["x_range"][0], params["x_range"][1],
                     int(params["x_points"]))
    R = int(params["realizations"])
    M = report.diagonalizer
    Ec = report.energy
    rows = []
    medians = {}
    for L in params["L_list"]:
        L = int(L)

        def chunk_err(s, t, L=L):
            v, th = potentials_for_sites_batch(model, L, seed, range(s, t))
            energies = Ec + np.concatenate([[0.0], xs]) / (n_Ec * L)
            E_mat = np.tile(energies, (t - s, 1))
            free = free_phase_batch(v, th, E_mat)
            mod = angle_map_m(M, free)
            psi = (mod[:, 1:] - mod[:, [0]]) / np.pi
            return np.abs(psi - xs[None, :]).max(axis=1)

        parts = _chunked(R, 16, chunk_err, workers)
        errs = np.concatenate(parts)
        medians[str(L)] = float(np.median(errs))
        rows.extend((L, r, float(e)) for r, e in enumerate(errs))
    med_list = [medians[str(int(L))] for L in params["L_list"]]
    passes = {"monotone_decreasing": all(a > b for a, b in zip(med_list, med_list[1:]))}
    stats = {"critical_energy": Ec, "dos_critical": n_Ec, "medians": medians}
    return stats, passes, {"psi_errors": (["L_sites", "realization", "sup_abs_err"],
                                          rows)}


def _exp_sharpness(model, params, seed, workers):
    report = _single_report(model, (-3.0, 3.0))
    n_Ec = dos_at_critical(expansion_coeffs(model, report), model)
    L = int(params["L"])
    delta = float(params["delta"])
    E0_L = report.energy + L ** (-delta)
    R = int(params["realizations"])
    j_max = int(params["j_max"])

    # clock-like run centered at the drifting energy E0(L)
    parts = _chunked(R, 256, lambda s, t: les_ensemble(
        model, E0_L, L, t - s, seed, window_atoms=j_max + 4, report=report,
        realization_offset=s), workers)
    sharp_samples = [x for part in parts for x in part]
    sharp = gap_statistics(sharp_samples)

    # Poisson control at a fixed noncritical energy (unfolded for the KS test)
    ids = _build_ids(model, params, seed, workers)
    E0c = float(params["control_E0"])
    Lc = int(params["control_L"])
    parts = _chunked(int(params["control_realizations"]), 256,
                     lambda s, t: les_ensemble(model, E0c, Lc, t - s, seed,
                                               window_atoms=int(params["control_window_atoms"]),
                                               ids=ids, realization_offset=s),
                     workers)
    control_samples = [x for part in parts for x in part]
    control_unfolded = gap_statistics(control_samples)
    # same control, rescaled with the critical DOS as the clock test would be
    parts = _chunked(int(params["control_realizations"]), 256,
                     lambda s, t: les_ensemble(model, E0c, Lc, t - s, seed,
                                               window_atoms=int(params["control_window_atoms"]),
                                               dos_value=n_Ec, realization_offset=s),
                     workers)
    control_resc_samples = [x for part in parts for x in part]
    control_resc = gap_statistics(control_resc_samples)

    lo, hi = params["mean_band"]
    stats = {"E0_of_L": E0_L, "sharp_gap_mean": sharp.mean,
             "sharp_frac_near_one": sharp.frac_near_one,
             "control_rescaled_mean": control_resc.mean,
             "control_frac_near_one": control_resc.frac_near_one,
             "control_ks_exp1": control_unfolded.ks_vs_exp1}
    passes = {
        "sharp_mean_in_band": lo <= sharp.mean <= hi,
        "control_fails_band": not (lo <= control_resc.mean <= hi)
                              and control_resc.frac_near_one < 0.5 * sharp.frac_near_one,
        "control_ks_exp1": control_unfolded.ks_vs_exp1 < params["ks_threshold"],
    }
    rows = [("sharp", s.realization_index, float(g))
            for s in sharp_samples for g in np.diff(s.atoms)]
    rows += [("control", s.realization_index, float(g))
             for s in control_resc_samples for g in np.diff(s.atoms)]
    return stats, passes, {"sharp_gaps": (["regime", "realization", "gap"], rows)}


def _exp_minami(model, params, seed, workers):
    R = int(params["realizations"])
    parts = _chunked(R, 512, lambda s, t: minami_probe(
        model, int(params["L"]), float(params["beta"]), float(params["gamma"]),
        float(params["c2"]), t - s, float(params["E0"]), seed,
        realization_offset=s), workers)
    counts = np.concatenate([p["counts"] for p in parts])
    p1 = float(np.mean(counts >= 1))
    p2 = float(np.mean(counts >= 2))
    stats = {"box_sites": parts[0]["box_sites"], "interval": list(parts[0]["interval"]),
             "p_ge1": p1, "p_ge2": p2,
             "ratio_p2_over_p1sq": p2 / p1 ** 2 if p1 > 0 else float("nan")}
    rows = [(r, int(c)) for r, c in enumerate(counts)]
    return stats, {}, {"counts": (["realization", "count"], rows)}


def _exp_holder(model, params, seed, workers):
    ids = _build_ids(model, params, seed, workers)
    rep = holder_probe(ids, float(params["E0"]), params["scales"])
    stats = {"rho1": rep.rho1, "rho2": rep.rho2, "product": rep.product,
             "satisfies_condition": rep.satisfies_condition}
    E0 = float(params["E0"])
    u0 = float(ids.evaluate(E0))
    rows = []
    for h in rep.scales:
        dN = 0.5 * (abs(float(ids.evaluate(E0 + h)) - u0)
                    + abs(u0 - float(ids.evaluate(E0 - h))))
        dE = 0.5 * (abs(float(ids.invert(min(u0 + h, 1.0))) - float(ids.invert(u0)))
                    + abs(float(ids.invert(u0)) - float(ids.invert(max(u0 - h, 0.0)))))
        rows.append((float(h), dN, dE))
    return stats, {}, {"increments": (["scale", "dN", "dE_inverse"], rows)}


def _exp_transport(model, params, seed, workers):
    q = float(params["q"])
    Ts = [float(x) for x in params["T_grid"]]
    radius = int(params["box_radius"])
    R = int(params["realizations"])
    qp = int(params["quadrature_points"])
    averaging = params["averaging"]
    runs = {}
    rows = []

    def run_window(name, window, grid, rad, reals, mdl):
        res = transport_exponent(mdl, q, grid, rad, window=window,
                                 realizations=reals, seed=seed,
                                 averaging=averaging, quadrature_points=qp)
        runs[name] = res
        for r, curve in enumerate(res["curves"]):
            for T, val in zip(curve.times, curve.values(averaging)):
                rows.append((name, r, float(T), float(val)))
        return res

    crit = run_window("critical_window", tuple(params["critical_window"]),
                      Ts, radius, R, model)
    loc = run_window("localized_window", tuple(params["localized_window"]),
                     Ts, radius, R, model)
    free_model = anderson_preset(0.0, 0.5)
    free = run_window("free_chain", None, [float(x) for x in params["free_T_grid"]],
                      int(params["free_box_radius"]), 1, free_model)

    passes = {
        "critical_slope": crit["slope"] >= params["critical_slope_min"],
        "localized_slope": loc["slope"] <= params["localized_slope_max"],
        "free_slope": abs(free["slope"] - 2.0) <= params["free_slope_tolerance"],
    }
    stats = {name: {"slope": res["slope"], "stderr": res["stderr"],
                    "per_realization": res["per_realization"].tolist()}
             for name, res in runs.items()}
    srows = [(name, res["slope"], res["stderr"]) for name, res in runs.items()]
    tables = {"moments": (["window", "realization", "T", "moment"], rows),
              "slopes": (["window", "slope", "stderr"], srows)}
    return stats, passes, tables


_EXPERIMENTS = {
    "critical": _exp_critical,
    "lyapunov": _exp_lyapunov,
    "ids": _exp_ids,
    "les-poisson": _exp_les_poisson,
    "les-clock": _exp_les_clock,
    "clock-spacing": _exp_clock_spacing,
    "uniformity": _exp_uniformity,
    "psi-convergence": _exp_psi_convergence,
    "sharpness": _exp_sharpness,
    "minami-probe": _exp_minami,
    "holder-probe": _exp_holder,
    "transport": _exp_transport,
}


def run(config: ExperimentConfig) -> RunReport:
    """Execute one configured experiment and write its CSV/JSON outputs."""
    diags = validate(config)
    if diags:
        raise ConfigError("; ".join(diags))
    model = model_from_dict(config.model)
    t0 = time.perf_counter()
    stats, passes, tables = _EXPERIMENTS[config.kind](model, config.params,
                                                      config.seed, config.workers)
    wall = time.perf_counter() - t0
    chash = _config_hash(config)
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    prefix = config.kind.replace("-", "_")
    for name, (header, rows) in tables.items():
        path = outdir / f"{prefix}_{name}.csv"
        _write_csv(path, header, rows, chash)
        files.append(str(path))
    passed = all(passes.values()) if passes else True
    summary = {
        "config": config.semantic_dict(),
        "config_hash": chash,
        "version": __version__,
        "kind": config.kind,
        "statistics": stats,
        "passes": passes,
        "pass": passed,
    }
    spath = outdir / f"{prefix}_summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
    files.append(str(spath))
    return RunReport(config=config.to_dict(), config_hash=chash, version=__version__,
                     statistics=stats, passes=passes, passed=passed,
                     wall_seconds=wall, files=files)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="polyspec",
                                     description="Random polymer model experiments")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS + ("validate",):
        sp = sub.add_parser(kind)
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--param", action="append", default=[],
                        metavar="KEY=VALUE", help="override one params entry "
                        "(VALUE parsed as JSON, falling back to string)")
    args = parser.parse_args(argv)

    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read config: {e}", file=sys.stderr)
            return 1
    kind = args.kind if args.kind != "validate" else raw.get("kind")
    if kind is None:
        print("error: validate requires a config file with a 'kind' field",
              file=sys.stderr)
        return 1
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.out is not None:
        raw["out"] = args.out
    params = dict(raw.get("params", {}))
    for item in args.param:
        if "=" not in item:
            print(f"error: --param expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 1
        key, _, val = item.partition("=")
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            params[key] = val
    raw["params"] = params

    try:
        config = build_config(kind, raw)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1

    if args.kind == "validate":
        diags = validate(config)
        for d in diags:
            print(d)
        print("valid" if not diags else f"{len(diags)} problem(s)")
        return 0 if not diags else 1

    try:
        report = run(config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - surface with experiment context
        print(f"error [{kind}]: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(json.dumps({"kind": report.config["kind"], "config_hash": report.config_hash,
                      "pass": report.passed, "passes": report.passes,
                      "wall_seconds": round(report.wall_seconds, 3),
                      "files": report.files}, indent=2))
    return 0 if report.passed else 2


if __name__ == "__main__":
    raise SystemExit(main())
