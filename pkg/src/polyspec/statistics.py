"""Density of states, unfolding, and local eigenvalue statistics.

The dichotomy under test: rescaled eigenvalues near a critical energy form a
uniform clock process (gaps concentrate at 1), while unfolded eigenvalues
centered anywhere else in the spectrum form a Poisson process (Exp(1) gaps,
Poissonian counts).  Everything here is ensemble-driven with deterministic
per-realization substreams.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.stats import chi2 as chi2_dist
from scipy.stats import kstest

from .model import PolymerModel, substream, lattice_for_sites, potentials_for_sites_batch
from .eigensolve import Spectrum, eigenvalues_in_window_batch, sturm_counts_batch
from .transfer import CriticalEnergyReport, ExpansionCoeffs, expansion_coeffs
from .prufer import free_phase_batch, angle_map_m

__all__ = [
    "InsufficientDataError",
    "EmpiricalIDS",
    "PointProcessSample",
    "ClockSpacingSample",
    "GapStatistics",
    "CountingStatistics",
    "HolderReport",
    "pool_spectra",
    "empirical_ids",
    "ids_at_critical",
    "dos_at_critical",
    "unfold",
    "les_sample",
    "les_ensemble",
    "gap_statistics",
    "counting_statistics",
    "clock_spacing_statistic",
    "uniformity_test",
    "holder_probe",
    "minami_probe",
]

_CHUNK = 256  # fixed realization chunk; results never depend on worker count


class InsufficientDataError(ValueError):
    """A statistical routine was handed fewer samples than it needs."""


@dataclass(frozen=True)
class EmpiricalIDS:
    """Integrated density of states from pooled order statistics.

    evaluate() interpolates linearly between the pooled eigenvalues at
    plotting positions i/(n+1), so it is strictly increasing on the pooled
    support and exactly invertible there; outside it clamps to 0 and 1.
    """

    pooled: np.ndarray
    total_count: int

    def __post_init__(self):
        pooled = np.asarray(self.pooled, float)
        pooled.flags.writeable = False
        object.__setattr__(self, "pooled", pooled)
        if pooled.size != self.total_count:
            raise ValueError("total_count must match pooled size")

    @property
    def _quantiles(self) -> np.ndarray:
        n = self.total_count
        return np.arange(1, n + 1) / (n + 1.0)

    def evaluate(self, E):
        return np.interp(E, self.pooled, self._quantiles, left=0.0, right=1.0)

    def invert(self, u):
        return np.interp(u, self._quantiles, self.pooled)


def pool_spectra(model: PolymerModel, L_ids: int, seed: int,
                 realization_indices) -> np.ndarray:
    """Concatenated full spectra of iid boxes, one per realization index."""
    pool = []
    for r in realization_indices:
        seq = lattice_for_sites(model, L_ids, seed, r)
        if L_ids == 1:
            pool.append(seq.potentials.copy())
        else:
            pool.append(eigvalsh_tridiagonal(seq.potentials, -seq.hoppings[1:],
                                             lapack_driver="sterf"))
    return np.concatenate(pool)


def empirical_ids(model: PolymerModel, L_ids: int, realizations: int,
                  seed: int) -> EmpiricalIDS:
    """Pool the full spectra of iid boxes of L_ids sites."""
    pooled = np.sort(pool_spectra(model, L_ids, seed, range(realizations)))
    return EmpiricalIDS(pooled=pooled, total_count=pooled.size)


def ids_at_critical(report: CriticalEnergyReport, model: PolymerModel) -> float:
    """N(E_c) = <eta/pi> / <L> from the canonical-branch rotation angles."""
    return model.mean(report.eta_plus, report.eta_minus) / np.pi / model.mean_length


def dos_at_critical(coeffs: ExpansionCoeffs, model: PolymerModel) -> float:
    """n(E_c) = (1/pi) <d> / <L>, the DOS value the clock rescaling uses."""
    return model.mean(coeffs.d_plus, coeffs.d_minus) / np.pi / model.mean_length


@dataclass(frozen=True)
class PointProcessSample:
    """Sorted atoms of one rescaled local eigenvalue process."""

    atoms: np.ndarray
    center_energy: float
    box_sites: int
    kind: str  # "unfolded" or "dos_rescaled"
    realization_index: int = 0

    def __post_init__(self):
        atoms = np.asarray(self.atoms, float)
        atoms.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class ClockSpacingSample:
    """Rescaled nearest-neighbor spacings n(E_c) L (E'_{j+1} - E'_j) near E_c."""

    rescaled_gaps: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.rescaled_gaps, float)
        g.flags.writeable = False
        object.__setattr__(self, "rescaled_gaps", g)
        if g.size and not np.all(g > 0):
            raise ValueError("rescaled gaps must be positive")


def unfold(spectrum: Spectrum, ids: EmpiricalIDS, E0: float,
           L_sites: int) -> PointProcessSample:
    """Map eigenvalues through the IDS: atoms = L (N(E_j) - N(E_0))."""
    atoms = L_sites * (ids.evaluate(spectrum.eigenvalues) - ids.evaluate(E0))
    return PointProcessSample(atoms=np.sort(atoms), center_energy=float(E0),
                              box_sites=int(L_sites), kind="unfolded")


def _critical_density(model: PolymerModel, report: CriticalEnergyReport) -> float:
    return dos_at_critical(expansion_coeffs(model, report), model)


def les_ensemble(model: PolymerModel, E0: float, L_sites: int, realizations: int,
                 seed: int, window_atoms: int = 20, ids: EmpiricalIDS | None = None,
                 report: CriticalEnergyReport | None = None,
                 dos_value: float | None = None,
                 realization_offset: int = 0) -> list[PointProcessSample]:
    """Local eigenvalue samples for many realizations at once.

    Exactly one of `ids` (unfolded rescaling), `report` (exact critical
    rescaling n(E_c) L (E - E_c)), or `dos_value` (the same rescaling with a
    precomputed density) must be given.  Only the energy window mapping to
    atoms within +-window_atoms is extracted, via windowed Sturm bisection,
    never the full spectrum.
    """
    given = sum(x is not None for x in (ids, report, dos_value))
    if given != 1:
        raise ValueError("pass exactly one of ids=, report=, or dos_value=")
    if window_atoms < 1:
        raise ValueError("window_atoms must be >= 1")
    if ids is not None:
        N0 = float(ids.evaluate(E0))
        a = float(ids.invert(N0 - window_atoms / L_sites))
        b = float(ids.invert(N0 + window_atoms / L_sites))
    else:
        n_Ec = _critical_density(model, report) if report is not None else float(dos_value)
        half = window_atoms / (n_Ec * L_sites)
        a, b = E0 - half, E0 + half
    if not b > a:
        raise ValueError("empty energy window (window_atoms too small for the IDS resolution)")
    samples = []
    for start in range(0, realizations, _CHUNK):
        idx = range(realization_offset + start,
                    realization_offset + min(start + _CHUNK, realizations))
        v, t = potentials_for_sites_batch(model, L_sites, seed, idx)
        evs = eigenvalues_in_window_batch(v, t[1:] ** 2, a, b)
        for r, e in zip(idx, evs):
            if ids is not None:
                atoms = L_sites * (ids.evaluate(e) - N0)
                kind = "unfolded"
            else:
                atoms = n_Ec * L_sites * (e - E0)
                kind = "dos_rescaled"
            samples.append(PointProcessSample(atoms=np.sort(atoms),
                                              center_energy=float(E0),
                                              box_sites=int(L_sites), kind=kind,
                                              realization_index=int(r)))
    return samples


def les_sample(model: PolymerModel, E0: float, L_sites: int,
               ids: EmpiricalIDS | None = None,
               report: CriticalEnergyReport | None = None,
               dos_value: float | None = None,
               window_atoms: int = 20, seed: int = 0,
               realization_index: int = 0) -> PointProcessSample:
    """One realization's rescaled local eigenvalue process near E0."""
    return les_ensemble(model, E0, L_sites, 1, seed, window_atoms, ids=ids,
                        report=report, dos_value=dos_value,
                        realization_offset=realization_index)[0]


@dataclass(frozen=True)
class GapStatistics:
    """Nearest-neighbor gap summary pooled across samples."""

    gaps: np.ndarray
    mean: float
    ks_vs_exp1: float
    ks_vs_degenerate1: float
    frac_near_one: float
    band: float


def gap_statistics(samples, band: float = 0.1) -> GapStatistics:
    """Pool within-sample nearest-neighbor gaps and test the two limit laws.

    ks_vs_exp1 is the one-sample KS distance to Exp(1); concentration near
    the clock value is reported as the fraction of gaps in [1-band, 1+band]
    (and a literal KS distance to the point mass at 1, for completeness).
    """
    gaps = [np.diff(s.atoms) for s in samples if s.atoms.size >= 2]
    gaps = np.concatenate(gaps) if gaps else np.empty(0)
    if gaps.size < 100:
        raise InsufficientDataError(f"need >= 100 pooled gaps, got {gaps.size}")
    ks_exp = float(kstest(gaps, "expon").statistic)
    frac_below = float(np.mean(gaps < 1.0))
    frac_le = float(np.mean(gaps <= 1.0))
    ks_deg = max(frac_below, 1.0 - frac_le)
    frac = float(np.mean(np.abs(gaps - 1.0) <= band))
    return GapStatistics(gaps=gaps, mean=float(gaps.mean()), ks_vs_exp1=ks_exp,
                         ks_vs_degenerate1=ks_deg, frac_near_one=frac, band=band)


@dataclass(frozen=True)
class CountingStatistics:
    """Counts of atoms in disjoint intervals against the Poisson prediction."""

    intervals: list
    counts: np.ndarray             # (samples, intervals)
    chi2_stats: np.ndarray
    chi2_pvalues: np.ndarray
    count_covariance: np.ndarray   # (intervals, intervals), off-diagonals ~ 0 for Poisson


def counting_statistics(samples, intervals) -> CountingStatistics:
    """Per-interval count histograms with chi-square against Poisson(|I|)."""
    if len(samples) < 500:
        raise InsufficientDataError(f"need >= 500 samples, got {len(samples)}")
    intervals = [(float(a), float(b)) for a, b in intervals]
    for i, (a, b) in enumerate(intervals):
        if b <= a:
            raise ValueError("intervals must be nondegenerate")
        for a2, b2 in intervals[i + 1:]:
            if max(a, a2) < min(b, b2):
                raise ValueError("intervals must be disjoint")
    counts = np.empty((len(samples), len(intervals)), dtype=np.int64)
    for j, (a, b) in enumerate(intervals):
        for i, s in enumerate(samples):
            counts[i, j] = np.searchsorted(s.atoms, b) - np.searchsorted(s.atoms, a)
    stats, pvals = [], []
    n = len(samples)
    for j, (a, b) in enumerate(intervals):
        lam = b - a
        kmax = int(counts[:, j].max())
        ks = np.arange(kmax + 1)
        pk = np.exp(-lam) * lam ** ks / np.array([math.factorial(k) for k in ks])
        observed = np.bincount(counts[:, j], minlength=kmax + 1).astype(float)
        expected = n * np.append(pk[:-1], max(1.0 - pk[:-1].sum(), 0.0))
        # lump the tail until every bin expects at least 5 samples
        while expected.size > 2 and expected[-1] < 5.0:
            expected[-2] += expected[-1]
            observed[-2] += observed[-1]
            expected, observed = expected[:-1], observed[:-1]
        stat = float(((observed - expected) ** 2 / expected).sum())
        dof = max(expected.size - 1, 1)
        stats.append(stat)
        pvals.append(float(chi2_dist.sf(stat, dof)))
    cov = np.cov(counts.T) if len(intervals) > 1 else np.atleast_2d(np.var(counts[:, 0]))
    return CountingStatistics(intervals=intervals, counts=counts,
                              chi2_stats=np.array(stats), chi2_pvalues=np.array(pvals),
                              count_covariance=np.atleast_2d(cov))


def clock_spacing_statistic(model: PolymerModel, report: CriticalEnergyReport,
                            L_sites: int, realizations: int, j_max: int,
                            seed: int, realization_offset: int = 0):
    """Rescaled spacings around E_c, re-indexed so E'_{-1} < E_c <= E'_0.

    Returns (ClockSpacingSample, summary dict).  Gaps j in [-j_max, j_max)
    are kept per realization, including the straddling one, and pooled;
    the summary carries the realization index of every pooled gap.
    """
    if report.irrationality_violations:
        warnings.warn("irrationality condition fails for this report "
                      f"(first violation k={report.irrationality_violations[0][0]}); "
                      "clock statistics may not converge")
    n_Ec = _critical_density(model, report)
    Ec = report.energy
    samples = les_ensemble(model, Ec, L_sites, realizations, seed,
                           window_atoms=j_max + 4, report=report,
                           realization_offset=realization_offset)
    gaps, gap_reals = [], []
    for s in samples:
        atoms = s.atoms
        i0 = int(np.searchsorted(atoms, 0.0))  # index of E'_0
        lo = max(i0 - j_max, 0)
        hi = min(i0 + j_max, atoms.size - 1)
        if hi > lo:
            g = np.diff(atoms[lo:hi + 1])
            gaps.append(g)
            gap_reals.append(np.full(g.size, s.realization_index, dtype=np.int64))
    gaps = np.concatenate(gaps) if gaps else np.empty(0)
    gap_reals = np.concatenate(gap_reals) if gap_reals else np.empty(0, np.int64)
    sample = ClockSpacingSample(rescaled_gaps=gaps)
    summary = {
        "n_critical": n_Ec,
        "num_gaps": int(gaps.size),
        "mean": float(gaps.mean()) if gaps.size else float("nan"),
        "variance": float(gaps.var(ddof=1)) if gaps.size > 1 else float("nan"),
        "frac_in_band": float(np.mean(np.abs(gaps - 1.0) <= 0.1)) if gaps.size else float("nan"),
        "realization_ids": gap_reals,
    }
    return sample, summary


def uniformity_test(model: PolymerModel, report: CriticalEnergyReport,
                    L_sites: int, realizations: int, seed: int,
                    realization_offset: int = 0) -> dict:
    """KS distance of the fractional Prufer phase phi(E_c, L)/pi to U[0,1)."""
    M = report.diagonalizer
    Ec = report.energy
    phis = np.empty(realizations)
    for start in range(0, realizations, _CHUNK):
        stop = min(start + _CHUNK, realizations)
        idx = range(realization_offset + start, realization_offset + stop)
        v, t = potentials_for_sites_batch(model, L_sites, seed, idx)
        th_free = free_phase_batch(v, t, np.full((len(idx), 1), Ec))[:, 0]
        th_mod = angle_map_m(M, th_free)
        phis[start:stop] = th_mod % np.pi
    ks = float(kstest(phis / np.pi, "uniform").statistic)
    return {"ks_statistic": ks, "phis": phis, "num_realizations": realizations}


@dataclass(frozen=True)
class HolderReport:
    """Local regularity probe of the IDS and its inverse."""

    rho1: float
    rho2: float
    product: float
    satisfies_condition: bool  # rho1 * rho2 > 2/3
    scales: np.ndarray


def holder_probe(ids: EmpiricalIDS, E0: float, scales) -> HolderReport:
    """Log-log regression slopes of IDS increments and inverse increments.

    rho1 regresses log |N(E0 +- h) - N(E0)| on log h over the given widths;
    rho2 does the same for the inverse function at u0 = N(E0).  Degenerate
    (zero) increments are skipped.  Slopes are reported raw, without capping
    at 1.
    """
    scales = np.asarray(sorted(scales), float)
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    N0 = float(ids.evaluate(E0))
    u0 = N0
    hs, dN = [], []
    ks, dE = [], []
    for h in scales:
        inc = 0.5 * (abs(float(ids.evaluate(E0 + h)) - N0)
                     + abs(N0 - float(ids.evaluate(E0 - h))))
        if inc > 0:
            hs.append(h)
            dN.append(inc)
        kup = min(u0 + h, 1.0)
        kdn = max(u0 - h, 0.0)
        inc2 = 0.5 * (abs(float(ids.invert(kup)) - float(ids.invert(u0)))
                      + abs(float(ids.invert(u0)) - float(ids.invert(kdn))))
        if inc2 > 0 and (kup - u0 > 0 or u0 - kdn > 0):
            ks.append(0.5 * ((kup - u0) + (u0 - kdn)))
            dE.append(inc2)
    if len(hs) < 2 or len(ks) < 2:
        raise InsufficientDataError("not enough nondegenerate scales for regression")
    rho1 = float(np.polyfit(np.log(hs), np.log(dN), 1)[0])
    rho2 = float(np.polyfit(np.log(ks), np.log(dE), 1)[0])
    return HolderReport(rho1=rho1, rho2=rho2, product=rho1 * rho2,
                        satisfies_condition=rho1 * rho2 > 2.0 / 3.0, scales=scales)


def minami_probe(model: PolymerModel, L_sites: int, beta: float, gamma: float,
                 c2: float, realizations: int, E0: float, seed: int,
                 realization_offset: int = 0) -> dict:
    """Frequencies of >=1 and >=2 eigenvalues of a size-L^beta box in a
    width c2/L^gamma interval centered at E0."""
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    ell1 = max(int(round(L_sites ** beta)), 2)
    width = c2 / L_sites ** gamma
    a, b = E0 - width / 2.0, E0 + width / 2.0
    counts = np.empty(realizations, dtype=np.int64)
    for start in range(0, realizations, _CHUNK):
        stop = min(start + _CHUNK, realizations)
        idx = range(realization_offset + start, realization_offset + stop)
        v, t = potentials_for_sites_batch(model, ell1, seed, idx)
        ends = sturm_counts_batch(v, t[1:] ** 2, np.tile([[a, b]], (len(idx), 1)))
        counts[start:stop] = ends[:, 1] - ends[:, 0]
    return {
        "box_sites": ell1,
        "interval": (a, b),
        "p_ge1": float(np.mean(counts >= 1)),
        "p_ge2": float(np.mean(counts >= 2)),
        "counts": counts,
    }
