"""
Robust / fragile classification of symmetries and the robust algebras.

A symmetry S of H is V-robust exactly when it commutes with every Kato
subprojection P_n(0) of H + eps V. When it does not, the largest singular
triple of some block P_m(0) S P_n(0) gives unit vectors psi_n, psi_m whose
wandering range stays above 2 |<psi_m|S psi_n>| as eps -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    OperatorAlgebra,
    bicommutant,
    commutant,
    equal,
    intersect,
    sample_hermitian,
)
from .errors import NonCommutingError, NotASymmetryError
from .kato import KatoFamily, subprojections
from .numkernel import as_hermitian, as_matrix, commutator
from .spectral import decompose, is_function_of_H

__all__ = [
    "FragilityWitness",
    "RobustnessVerdict",
    "RestrictedResult",
    "is_symmetry",
    "classify",
    "classify_commuting",
    "robust_algebra",
    "robust_algebra_restricted",
    "completely_robust_test",
    "sample_seeds",
]

ROBUST, FRAGILE, INCONCLUSIVE = "robust", "fragile", "inconclusive"


@dataclass
class FragilityWitness:
    n: int
    m: int
    psi_n: np.ndarray
    psi_m: np.ndarray
    lower_bound: float


@dataclass
class RobustnessVerdict:
    robust: bool
    max_commutator: float
    tol: float
    status: str
    witness: FragilityWitness | None = None
    notes: list[str] = field(default_factory=list)
    commutator_norms: np.ndarray | None = None
    family: KatoFamily | None = field(default=None, repr=False)

    @property
    def fragile(self) -> bool:
        return self.status == FRAGILE


def is_symmetry(S, H, tol: float = 1e-8) -> tuple[bool, float]:
    """``[S, H] = 0`` relative to ``||S||_F max(1, ||H||_F)``; returns (ok, residual)."""
    S = as_matrix(S, "S")
    H = as_matrix(H, "H")
    residual = float(np.linalg.norm(commutator(S, H)))
    bound = tol * float(np.linalg.norm(S)) * max(1.0, float(np.linalg.norm(H)))
    return residual <= bound, residual


def _unit_phase(x: np.ndarray) -> complex:
    mags = np.abs(x)
    idx = np.flatnonzero(mags > 1e-10 * mags.max())
    c = x[idx[0]]
    return abs(c) / c


def _witness(S, family: KatoFamily) -> FragilityWitness | None:
    best = None
    for n, Bn in enumerate(family.bases):
        for m, Bm in enumerate(family.bases):
            if m == n:
                continue
            block = Bm.conj().T @ S @ Bn
            u, s, vh = np.linalg.svd(block)
            if best is None or s[0] > best[0]:
                best = (float(s[0]), n, m, Bn @ vh[0].conj(), Bm @ u[:, 0])
    if best is None:
        return None
    sigma, n, m, psi_n, psi_m = best
    ph = _unit_phase(psi_n)
    return FragilityWitness(n, m, psi_n * ph, psi_m * ph, 2.0 * sigma)


def classify(S, H, V, tol: float | None = None, family: KatoFamily | None = None,
             symmetry_tol: float = 1e-8) -> RobustnessVerdict:
    """Decide V-robustness of the symmetry S of H.

    ``tol`` defaults to ``1e-8 ||S||_F``. S is robust when
    ``max_n ||[S, P_n(0)]||_F <= tol`` and fragile (with a witness) above
    ``10 tol``; the band in between is reported inconclusive. Residual
    degeneracy (blocks unresolved through second order) makes a robust
    answer inconclusive when S is not scalar on such a block.

    Raises
    ------
    NotASymmetryError
        If S does not commute with H.
    """
    S = as_matrix(S, "S")
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    ok, residual = is_symmetry(S, H, symmetry_tol)
    if not ok:
        raise NotASymmetryError(residual, symmetry_tol * np.linalg.norm(S) * max(1.0, np.linalg.norm(H)))
    if tol is None:
        tol = 1e-8 * max(float(np.linalg.norm(S)), 1e-300)
    if family is None:
        family = subprojections(H, V)
    norms = family.commutator_norms(S)
    worst = float(norms.max()) if norms.size else 0.0
    notes: list[str] = []

    if worst > 10 * tol:
        w = _witness(S, family)
        if w is not None and (family.residual_flags[w.n] or family.residual_flags[w.m]):
            notes.append("witness vectors lie in a merged (residual) subprojection")
        return RobustnessVerdict(False, worst, tol, FRAGILE, w, notes, norms, family)
    if worst > tol:
        notes.append("commutator norm inside the hysteresis band (tol, 10 tol]")
        return RobustnessVerdict(False, worst, tol, INCONCLUSIVE, None, notes, norms, family)
    for i, flag in enumerate(family.residual_flags):
        if not flag:
            continue
        B = family.bases[i]
        Sk = B.conj().T @ S @ B
        scalar = np.trace(Sk) / B.shape[1]
        if np.linalg.norm(Sk - scalar * np.eye(B.shape[1])) > tol:
            notes.append(f"S acts non-trivially on residual block {i}; finer splitting could break it")
            return RobustnessVerdict(False, worst, tol, INCONCLUSIVE, None, notes, norms, family)
    return RobustnessVerdict(True, worst, tol, ROBUST, None, notes, norms, family)


def classify_commuting(S, H, V, tol: float | None = None, commute_tol: float = 1e-9) -> RobustnessVerdict:
    """Robustness against a perturbation commuting with H: robust iff [S, V] = 0."""
    S = as_matrix(S, "S")
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    res = float(np.linalg.norm(commutator(V, H)))
    bound = commute_tol * max(1.0, float(np.linalg.norm(H)) * float(np.linalg.norm(V)))
    if res > bound:
        raise NonCommutingError(res, bound, what="V and H")
    if tol is None:
        tol = 1e-8 * max(float(np.linalg.norm(S)), 1e-300) * max(1.0, float(np.linalg.norm(V)))
    c = float(np.linalg.norm(commutator(S, V)))
    robust = c <= tol
    return RobustnessVerdict(robust, c, tol, ROBUST if robust else FRAGILE)


def robust_algebra(H, V, family: KatoFamily | None = None) -> OperatorAlgebra:
    """R_V(H): the commutant of the Kato subprojections."""
    if family is None:
        family = subprojections(as_hermitian(H, "H"), as_hermitian(V, "V"))
    return commutant(family.subprojections)


def sample_seeds(seed: int, count: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return sorted(int(s) for s in rng.integers(0, 2**31 - 1, size=count))


@dataclass
class RestrictedResult:
    algebra: OperatorAlgebra
    predicted: OperatorAlgebra
    matches: bool
    seeds: list[int]
    perturbations: list[np.ndarray] = field(repr=False, default_factory=list)


def robust_algebra_restricted(H, J_set: Sequence, num_samples: int = 25, seed: int = 42,
                              commute_tol: float = 1e-9) -> RestrictedResult:
    """Monte-Carlo estimate of the algebra robust against every Hermitian V in {J}'.

    The estimate is the intersection of R_V(H) over ``num_samples`` random
    V; it is compared with the bicommutant of {H} u J.
    """
    H = as_hermitian(H, "H")
    Js = [as_hermitian(J, "J") for J in J_set]
    for J in Js:
        res = float(np.linalg.norm(commutator(H, J)))
        bound = commute_tol * max(1.0, float(np.linalg.norm(H)) * float(np.linalg.norm(J)))
        if res > bound:
            raise NonCommutingError(res, bound, what="H and J")
    n = H.shape[0]
    pool = commutant(Js, n=n)
    dec = decompose(H)
    seeds = sample_seeds(seed, num_samples)
    algs, Vs = [], []
    for s in seeds:
        V = sample_hermitian(pool, s)
        Vs.append(V)
        algs.append(robust_algebra(H, V, subprojections(H, V, dec)))
    result = intersect(algs)
    predicted = bicommutant([H, *Js])
    return RestrictedResult(result, predicted, equal(result, predicted), seeds, Vs)


def completely_robust_test(S, H, tol: float | None = None) -> bool:
    """True iff S is a function of H (lies in the bicommutant of H)."""
    return is_function_of_H(S, decompose(H), tol)[0]
