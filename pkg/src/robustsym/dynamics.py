"""
Heisenberg-picture dynamics under H(eps) = H + eps V.

The supremum over all times of an almost-periodic norm cannot be computed
exactly. ``wandering_range`` therefore returns a sampled lower estimate
together with the upper bound 2 ||offblock(S')||_F, where S' is S in the
eigenbasis of H(eps) and offblock drops entries inside an eigenvalue
cluster. Evolution is evaluated spectrally: one diagonalization, then an
entrywise phase product per time sample.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kato import KatoFamily, KatoUnitary, block_diagonal_approx, kato_unitary
from .numkernel import as_hermitian, as_matrix, op_norm, unitary_exp
from .spectral import SpectralDecomposition, decompose

__all__ = [
    "TimeSamplingPlan",
    "WanderingRangeEstimate",
    "VacuousBoundWarning",
    "heisenberg",
    "split_AB",
    "sample_times",
    "wandering_range",
    "finite_dim_bound",
    "eternal_gap",
    "exponent_fit",
]


class VacuousBoundWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TimeSamplingPlan:
    grid_count: int = 4096
    grid_horizon: float | None = None  # None: 4 pi / (smallest gap of H(eps))
    random_count: int = 512
    random_horizon: float | None = None  # None: 1e6 * grid_horizon
    seed: int = 42

    def __post_init__(self):
        if self.grid_count <= 0 or self.random_count < 0:
            raise ValueError("sample counts must be positive")
        for h in (self.grid_horizon, self.random_horizon):
            if h is not None and h <= 0:
                raise ValueError("horizons must be positive")


@dataclass(frozen=True)
class WanderingRangeEstimate:
    lower: float
    upper: float
    t_argmax: float
    samples_used: int


def heisenberg(S, H, t: float) -> np.ndarray:
    """e^{itH} S e^{-itH}."""
    S = as_matrix(S, "S")
    U = unitary_exp(H, t)
    return U.conj().T @ S @ U


def split_AB(S, H, V, eps: float, t: float, family: KatoFamily,
             kato: KatoUnitary | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Fragile part A and robust part B of e^{itH(eps)} S e^{-itH(eps)} - S.

    A = e^{itH(eps)} [S, e^{-itH~(eps)}],
    B = e^{itH(eps)} [S, e^{-itH(eps)} - e^{-itH~(eps)}].
    """
    S = as_matrix(S, "S")
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    Ht = block_diagonal_approx(H, V, eps, family, kato)
    Heps = H + eps * V
    Ue = unitary_exp(Heps, t)
    Ut = unitary_exp(Ht, t)
    fwd = Ue.conj().T
    A = fwd @ (S @ Ut - Ut @ S)
    D = Ue - Ut
    B = fwd @ (S @ D - D @ S)
    return A, B


def _min_gap(values: np.ndarray) -> float:
    return float(np.min(np.diff(values))) if len(values) > 1 else float("inf")


def sample_times(plan: TimeSamplingPlan, min_gap: float) -> np.ndarray:
    T = plan.grid_horizon
    if T is None:
        T = 4 * math.pi / min_gap if np.isfinite(min_gap) and min_gap > 0 else 4 * math.pi
    Tb = plan.random_horizon if plan.random_horizon is not None else 1e6 * T
    grid = np.linspace(0.0, T, plan.grid_count)
    rng = np.random.default_rng(plan.seed)
    return np.concatenate([grid, rng.uniform(0.0, Tb, plan.random_count)])


def _deviation_norms(Sp: np.ndarray, lam: np.ndarray, phi: np.ndarray, times: np.ndarray,
                     chunk: int = 2048) -> np.ndarray:
    # ||(e^{itL} S' e^{-itL} - S') phi|| = ||S'(p*phi) - p*(S' phi)||, p = e^{-itL}
    Sphi = Sp @ phi
    out = np.empty(len(times))
    for a in range(0, len(times), chunk):
        t = times[a:a + chunk]
        p = np.exp(-1j * np.outer(t, lam))
        X = (p * phi) @ Sp.T - p * Sphi
        out[a:a + chunk] = np.linalg.norm(X, axis=1)
    return out


def wandering_range(S, H, V, eps: float, psi, plan: TimeSamplingPlan | None = None,
                    cluster_tol: float | None = None) -> WanderingRangeEstimate:
    """Certified bracket for sup_t ||(e^{itH(eps)} S e^{-itH(eps)} - S) psi||.

    Eigenvalues of H(eps) are replaced by their cluster means, so entries
    inside a cluster do not evolve and ``lower <= upper`` holds up to roundoff.
    """
    S = as_matrix(S, "S")
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    psi = np.asarray(psi, dtype=np.complex128)
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"psi must be a unit vector (norm {nrm:.6g})")
    plan = plan or TimeSamplingPlan()
    dec = decompose(H + eps * V, cluster_tol)
    W = dec.eigenvectors
    lam = dec.values[dec.labels]
    Sp = W.conj().T @ S @ W
    offblock = np.where(dec.labels[:, None] == dec.labels[None, :], 0.0, Sp)
    upper = 2.0 * float(np.linalg.norm(offblock))
    times = sample_times(plan, dec.gap)
    norms = _deviation_norms(Sp, lam, W.conj().T @ psi, times)
    i = int(np.argmax(norms))
    return WanderingRangeEstimate(float(norms[i]), upper, float(times[i]), len(times))


def finite_dim_bound(S, H, V, eps: float, dec: SpectralDecomposition | None = None) -> float:
    """14 sqrt(d) ||V|| ||S|| |eps| / eta, d distinct eigenvalues and eta the gap of H.

    For a single-cluster spectrum the bound is vacuous; 0 is returned with a
    ``VacuousBoundWarning``.
    """
    if dec is None:
        dec = decompose(H)
    if not np.isfinite(dec.gap):
        warnings.warn("single-cluster spectrum: bound is vacuous", VacuousBoundWarning, stacklevel=2)
        return 0.0
    d = dec.count
    return 14.0 * math.sqrt(d) * op_norm(V) * op_norm(S) * abs(eps) / dec.gap


def eternal_gap(H, V, eps: float, psi, family: KatoFamily, plan: TimeSamplingPlan | None = None,
                kato: KatoUnitary | None = None) -> float:
    """max over sampled t of ||(e^{-itH(eps)} - e^{-itH~(eps)}) psi||.

    Uses H~(eps) = U^dag H(eps) U, so both propagators share the
    eigenvalues of H(eps): with M = W^dag U^dag W the norm is
    ||p * a - M (p * b)||, a = W^dag psi, b = W^dag U psi.
    """
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    psi = np.asarray(psi, dtype=np.complex128)
    if eps == 0:
        return 0.0
    if kato is None:
        kato = kato_unitary(H, V, eps, family)
    plan = plan or TimeSamplingPlan()
    lam, W = kato.eigenvalues, kato.eigenvectors
    U = kato.matrix
    a = W.conj().T @ psi
    b = W.conj().T @ (U @ psi)
    M = W.conj().T @ U.conj().T @ W
    dec = decompose(H + eps * V)
    times = sample_times(plan, dec.gap)
    best = 0.0
    for s in range(0, len(times), 2048):
        p = np.exp(-1j * np.outer(times[s:s + 2048], lam))
        X = p * a - (p * b) @ M.T
        best = max(best, float(np.linalg.norm(X, axis=1).max()))
    return best


def exponent_fit(eps_values, delta_values) -> tuple[float, float]:
    """Least-squares slope of log(delta) against log(eps) and its r^2."""
    e = np.asarray(eps_values, dtype=float)
    d = np.asarray(delta_values, dtype=float)
    if e.shape != d.shape or len(e) < 3:
        raise ValueError("need at least three (eps, delta) pairs of equal length")
    if not (np.all(e > 0) and np.all(d > 0) and np.all(np.isfinite(e)) and np.all(np.isfinite(d))):
        raise ValueError("eps and delta values must be positive and finite")
    x, y = np.log(e), np.log(d)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(r2)
