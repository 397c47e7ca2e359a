"""Spectra of finite Dirichlet Hamiltonians via Sturm-sequence bisection.

The operator acts as (H psi)(n) = -t(n+1) psi(n+1) - t(n) psi(n-1) + v(n) psi(n)
restricted to {0, ..., L-1} with Dirichlet conditions, so the matrix is real
symmetric tridiagonal with diagonal v and off-diagonal entries -t(n).

Eigenvalue extraction is windowed by design: the statistics experiments need
only a handful of eigenvalues near a reference energy out of boxes with 1e4+
sites, so bisection on the Sturm count is the workhorse.  A LAPACK-backed
dense decomposition serves as the independent oracle for small instances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .model import LatticeSequences

__all__ = [
    "TridiagonalOperator",
    "Spectrum",
    "build_hamiltonian",
    "gershgorin_interval",
    "sturm_count",
    "eigenvalues_in_window",
    "full_spectrum",
    "eigenvector",
    "dense_oracle",
]

DENSE_ORACLE_CAP = 4096


def _freeze(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TridiagonalOperator:
    """Real symmetric tridiagonal operator with strictly negative couplings."""

    diagonal: np.ndarray
    offdiagonal: np.ndarray  # hopping t(n) coupling sites n-1 and n, n = 1..L-1
    num_sites: int

    def __post_init__(self):
        object.__setattr__(self, "diagonal", _freeze(np.asarray(self.diagonal, float)))
        object.__setattr__(self, "offdiagonal", _freeze(np.asarray(self.offdiagonal, float)))
        if self.diagonal.shape != (self.num_sites,):
            raise ValueError("diagonal must have num_sites entries")
        if self.offdiagonal.shape != (max(self.num_sites - 1, 0),):
            raise ValueError("offdiagonal must have num_sites - 1 entries")
        if self.num_sites < 1:
            raise ValueError("num_sites must be >= 1")
        if self.offdiagonal.size and not np.all(self.offdiagonal > 0):
            raise ValueError("all hoppings must be strictly positive")

    def to_dense(self) -> np.ndarray:
        H = np.diag(self.diagonal)
        idx = np.arange(self.num_sites - 1)
        H[idx, idx + 1] = -self.offdiagonal
        H[idx + 1, idx] = -self.offdiagonal
        return H


@dataclass(frozen=True)
class Spectrum:
    """Strictly increasing eigenvalues, optionally restricted to a window."""

    eigenvalues: np.ndarray
    window: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _freeze(np.asarray(self.eigenvalues, float)))
        if self.eigenvalues.size > 1 and not np.all(np.diff(self.eigenvalues) > 0):
            raise ValueError("eigenvalues must be strictly increasing")

    def __len__(self):
        return self.eigenvalues.size


def build_hamiltonian(seq: LatticeSequences) -> TridiagonalOperator:
    """Dirichlet restriction: boundary hoppings t(0) and t(L) are dropped."""
    return TridiagonalOperator(diagonal=seq.potentials,
                               offdiagonal=seq.hoppings[1:],
                               num_sites=seq.num_sites)


def gershgorin_interval(H: TridiagonalOperator) -> tuple[float, float]:
    tmax = float(H.offdiagonal.max()) if H.offdiagonal.size else 0.0
    return (float(H.diagonal.min()) - 2 * tmax, float(H.diagonal.max()) + 2 * tmax)


def _pivmin(v: np.ndarray, tsq: np.ndarray) -> float:
    scale = float(np.abs(v).max(initial=1.0))
    if tsq.size:
        scale = max(scale, float(tsq.max()))
    return np.finfo(float).eps * scale


def sturm_counts_batch(v: np.ndarray, tsq: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Eigenvalue counts below each shift for a batch of operators.

    Parameters
    ----------
    v : (L, R) diagonals, one operator per column.
    tsq : (L-1, R) squared off-diagonal hoppings.
    shifts : (R, K) evaluation energies.

    Returns
    -------
    (R, K) integer array: negative-pivot counts of the LDL^T recursion of
    H - E.  Zero pivots are replaced by a tiny negative value, so an
    eigenvalue exactly at a shift counts as below it.
    """
    pivmin = _pivmin(v, tsq)
    counts = np.zeros(shifts.shape, dtype=np.int64)
    d = v[0][:, None] - shifts
    np.copyto(d, -pivmin, where=np.abs(d) < pivmin)
    counts += d < 0
    for n in range(1, v.shape[0]):
        d = (v[n][:, None] - shifts) - tsq[n - 1][:, None] / d
        np.copyto(d, -pivmin, where=np.abs(d) < pivmin)
        counts += d < 0
    return counts


def sturm_count(H: TridiagonalOperator, E) -> int | np.ndarray:
    """Number of eigenvalues below E (scalar or array of energies)."""
    shifts = np.atleast_1d(np.asarray(E, float))[None, :]
    counts = sturm_counts_batch(H.diagonal[:, None], (H.offdiagonal ** 2)[:, None], shifts)[0]
    return int(counts[0]) if np.isscalar(E) or np.ndim(E) == 0 else counts


def eigenvalues_in_window_batch(v: np.ndarray, tsq: np.ndarray, a: float, b: float,
                                tol: float = 1e-11) -> list[np.ndarray]:
    """All eigenvalues in [a, b) for a batch of same-size operators.

    Bisection runs in lockstep over all operators and all target indices;
    each eigenvalue is bracketed to width <= tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not b > a:
        raise ValueError("window must be nonempty")
    R = v.shape[1]
    ends = sturm_counts_batch(v, tsq, np.tile([[a, b]], (R, 1)))
    na, nb = ends[:, 0], ends[:, 1]
    K = int((nb - na).max(initial=0))
    if K == 0:
        return [np.empty(0) for _ in range(R)]
    lo = np.full((R, K), a)
    hi = np.full((R, K), b)
    target = na[:, None] + np.arange(K)[None, :]  # 0-based eigenvalue index
    active = target < nb[:, None]
    for _ in range(max(int(np.ceil(np.log2((b - a) / tol))), 1)):
        mid = 0.5 * (lo + hi)
        above = sturm_counts_batch(v, tsq, mid) <= target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    mid = 0.5 * (lo + hi)
    return [np.sort(mid[r][active[r]]) for r in range(R)]


def eigenvalues_in_window(H: TridiagonalOperator, window, tol: float = 1e-11) -> Spectrum:
    """Eigenvalues of H inside `window`, each bracketed to width <= tol."""
    a, b = float(window[0]), float(window[1])
    evs = eigenvalues_in_window_batch(H.diagonal[:, None], (H.offdiagonal ** 2)[:, None],
                                      a, b, tol)[0]
    return Spectrum(eigenvalues=evs, window=(a, b))


def full_spectrum(H: TridiagonalOperator, tol: float = 1e-11) -> Spectrum:
    """All eigenvalues, windowed by the Gershgorin enclosure."""
    lo, hi = gershgorin_interval(H)
    pad = max(tol, 1e-9 * max(abs(lo), abs(hi), 1.0))
    spec = eigenvalues_in_window(H, (lo - pad, hi + pad), tol)
    if len(spec) != H.num_sites:
        raise RuntimeError("full spectrum extraction lost eigenvalues")  # defensive
    return Spectrum(eigenvalues=spec.eigenvalues, window=(lo, hi))


def eigenvector(H: TridiagonalOperator, E: float, max_iter: int = 8) -> np.ndarray:
    """Unit eigenvector for the eigenvalue nearest E, by inverse iteration.

    Sign convention: the largest-magnitude entry is positive.  Raises
    RuntimeError if the residual has not converged after max_iter sweeps.
    """
    L = H.num_sites
    if L == 1:
        return np.ones(1)
    scale = max(float(np.abs(H.diagonal).max()), float(H.offdiagonal.max()), 1.0)
    # small shift keeps H - E nonsingular when E is (numerically) exact
    shift = E + 1e-12 * scale
    ab = np.zeros((3, L))
    ab[0, 1:] = -H.offdiagonal
    ab[1, :] = H.diagonal - shift
    ab[2, :-1] = -H.offdiagonal
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(L)
    psi /= np.linalg.norm(psi)
    tol = 1e-8 * scale
    for _ in range(max_iter):
        try:
            psi = solve_banded((1, 1), ab, psi)
        except np.linalg.LinAlgError:
            ab[1, :] += 1e-10 * scale
            continue
        psi /= np.linalg.norm(psi)
        resid = np.linalg.norm(_apply(H, psi) - E * psi)
        if resid <= tol:
            if psi[np.argmax(np.abs(psi))] < 0:
                psi = -psi
            return psi
    raise RuntimeError(f"inverse iteration did not converge at E={E}")


def _apply(H: TridiagonalOperator, psi: np.ndarray) -> np.ndarray:
    out = H.diagonal * psi
    if H.num_sites > 1:
        out[:-1] -= H.offdiagonal * psi[1:]
        out[1:] -= H.offdiagonal * psi[:-1]
    return out


def dense_oracle(H: TridiagonalOperator, cap: int = DENSE_ORACLE_CAP):
    """Full eigendecomposition via LAPACK, for cross-checking small instances.

    Returns (Spectrum, eigenvector matrix) with orthonormal columns and the
    same sign convention as `eigenvector`.
    """
    if H.num_sites > cap:
        raise ValueError(f"dense oracle capped at {cap} sites, got {H.num_sites}")
    if H.num_sites == 1:
        return Spectrum(eigenvalues=H.diagonal.copy()), np.ones((1, 1))
    w, Phi = eigh_tridiagonal(H.diagonal, -H.offdiagonal)
    flip = Phi[np.argmax(np.abs(Phi), axis=0), np.arange(H.num_sites)] < 0
    Phi[:, flip] = -Phi[:, flip]
    return Spectrum(eigenvalues=w), Phi
