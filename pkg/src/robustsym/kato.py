"""
Perturbation structure of H(eps) = H + eps V.

* ``subprojections``: limits P_n(0) of the eigenprojections of H(eps) as
  eps -> 0, from degenerate perturbation theory. Each degenerate cluster
  P_k of H is split by the first-order operator P_k V P_k; blocks still
  degenerate are split by the second-order operator
  P V R_k V P, where R_k = sum_{l != k} P_l / (h_k - h_l) is the reduced
  resolvent. Blocks degenerate through order two are probed at a small
  eps: if H(eps) is exactly degenerate there the block is kept as a
  genuine subprojection, otherwise it is flagged as residual.
* ``subprojections_numerical``: independent oracle; diagonalizes H(eps)
  along a decreasing eps sequence and extrapolates the grouped
  eigenprojections to eps = 0.
* ``kato_unitary``: U(eps) = sum_n P_n(eps) P_n(0) (1 - R_n)^(-1/2) with
  R_n = (P_n(eps) - P_n(0))^2, which maps P_n(0) onto P_n(eps).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EpsilonTooLargeError,
    NotRobustError,
    OracleUnstableError,
    PairingError,
)
from .numkernel import as_hermitian, as_matrix, commutator, hermitian_eig, op_norm
from .spectral import SpectralDecomposition, cluster_values, decompose

log = logging.getLogger(__name__)

__all__ = [
    "KatoFamily",
    "KatoUnitary",
    "perturbed_spectral",
    "reduced_resolvent",
    "subprojections",
    "subprojections_numerical",
    "eps_safe",
    "kato_unitary",
    "block_diagonal_approx",
    "adiabatic_invariant",
    "match_families",
]


@dataclass
class KatoFamily:
    """Subprojections P_n(0) with their parent cluster and branch data."""

    bases: list[np.ndarray]  # orthonormal basis of Range(P_n(0)), shape (dim, rank)
    parent: list[int]
    slopes: np.ndarray  # h_n'(0)
    second_order: np.ndarray  # h_n''(0)/2 when computed, nan otherwise
    splitting_order: list[int]
    residual_flags: list[bool]
    dec: SpectralDecomposition = field(repr=False)

    @property
    def subprojections(self) -> list[np.ndarray]:
        return [B @ B.conj().T for B in self.bases]

    @property
    def ranks(self) -> list[int]:
        return [B.shape[1] for B in self.bases]

    def __len__(self) -> int:
        return len(self.bases)

    @property
    def sub_gap(self) -> float:
        """Smallest first-order splitting between sibling subprojections."""
        gap = np.inf
        for k in set(self.parent):
            s = np.sort([self.slopes[i] for i, p in enumerate(self.parent) if p == k])
            d = np.diff(s)
            d = d[d > 1e-8 * max(1.0, float(np.abs(s).max()))]
            if d.size:
                gap = min(gap, float(d.min()))
        return float(gap)

    @property
    def sub_gap2(self) -> float:
        """Smallest second-order splitting among first-order-degenerate siblings."""
        gap = np.inf
        groups: dict[tuple, list[float]] = {}
        for i, p in enumerate(self.parent):
            if self.splitting_order[i] == 2 and np.isfinite(self.second_order[i]):
                key = (p, round(float(self.slopes[i]), 6))
                groups.setdefault(key, []).append(float(self.second_order[i]))
        for vals in groups.values():
            d = np.diff(np.sort(vals))
            d = d[d > 1e-8]
            if d.size:
                gap = min(gap, float(d.min()))
        return float(gap)

    def commutator_norms(self, S) -> np.ndarray:
        S = np.asarray(S, dtype=np.complex128)
        return np.array([np.linalg.norm(commutator(S, P)) for P in self.subprojections])


@dataclass
class KatoUnitary:
    epsilon: float
    matrix: np.ndarray
    max_Rn_norm: float
    family: KatoFamily = field(repr=False)
    projections_eps: list[np.ndarray] = field(repr=False, default_factory=list)
    branch_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_overlap: float = 1.0
    unitarity_residual: float = 0.0
    intertwining_residual: float = 0.0
    eigenvalues: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    eigenvectors: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((0, 0)))


def perturbed_spectral(H, V, eps: float, cluster_tol: float | None = None) -> SpectralDecomposition:
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    return decompose(H + eps * V, cluster_tol)


def reduced_resolvent(dec: SpectralDecomposition, k: int) -> np.ndarray:
    """sum_{l != k} P_l / (h_k - h_l)."""
    out = np.zeros((dec.dim, dec.dim), dtype=np.complex128)
    for l, (h, P) in enumerate(zip(dec.values, dec.projections)):
        if l != k:
            out += P / (dec.values[k] - h)
    return out


def _herm(M):
    return 0.5 * (M + M.conj().T)


def subprojections(H, V, dec: SpectralDecomposition | None = None, split_tol: float | None = None,
                   probe: bool = True) -> KatoFamily:
    """Kato subprojections P_n(0) by first- and second-order degenerate splitting.

    Parameters
    ----------
    H, V : Hermitian matrices
    dec : decomposition of H (computed if omitted)
    split_tol : float, optional
        Clustering tolerance for first-order eigenvalues; the second-order
        tolerance is scaled by ``||V|| / eta``. Defaults to
        ``1e-8 * max(1, ||V||)``.
    probe : bool
        Whether to check blocks degenerate through order two for exact
        degeneracy of H(eps).
    """
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    if dec is None:
        dec = decompose(H)
    vnorm = op_norm(V)
    tol1 = split_tol if split_tol is not None else 1e-8 * max(1.0, vnorm)
    eta = dec.gap if np.isfinite(dec.gap) else 1.0
    tol2 = tol1 * max(1.0, vnorm / eta)

    bases, parent, slopes, second, order, pending = [], [], [], [], [], []
    for k, B in enumerate(dec.bases):
        Rk = reduced_resolvent(dec, k)
        VRV = V @ Rk @ V
        M1 = _herm(B.conj().T @ V @ B)
        w1, u1 = hermitian_eig(M1)
        lab1, _ = cluster_values(w1, tol1)
        for g in range(lab1[-1] + 1):
            sel = lab1 == g
            C = B @ u1[:, sel]
            slope = float(w1[sel].mean())
            M2 = _herm(C.conj().T @ VRV @ C)
            if C.shape[1] == 1:
                bases.append(C)
                parent.append(k)
                slopes.append(slope)
                second.append(float(M2[0, 0].real))
                order.append(1)
                pending.append(False)
                continue
            w2, u2 = hermitian_eig(M2)
            lab2, _ = cluster_values(w2, tol2)
            for h in range(lab2[-1] + 1):
                sel2 = lab2 == h
                bases.append(C @ u2[:, sel2])
                parent.append(k)
                slopes.append(slope)
                second.append(float(w2[sel2].mean()))
                order.append(2)
                pending.append(bool(sel2.sum() > 1))

    family = KatoFamily(bases, parent, np.array(slopes), np.array(second), order,
                        list(pending), dec)
    if any(pending):
        if probe and vnorm > 0:
            family.residual_flags = _probe_residual(H, V, family, pending)
        if any(family.residual_flags):
            log.warning("degeneracy unresolved through second order in %d block(s)",
                        sum(family.residual_flags))
    return family


def _probe_residual(H, V, family: KatoFamily, pending: list[bool]) -> list[bool]:
    # exact degeneracies (from a joint symmetry) persist at every eps; order >= 3 splittings do not
    e = 0.25 * min(eps_safe(V, family), 0.1)
    w, v = hermitian_eig(H + e * V)
    owner = _assign(v, family)
    scale = max(1.0, op_norm(H), op_norm(V))
    flags = []
    for n, flag in enumerate(pending):
        if not flag:
            flags.append(False)
            continue
        vals = w[owner == n]
        exact = len(vals) == family.ranks[n] and vals.max() - vals.min() <= 1e-10 * scale
        flags.append(not exact)
    return flags


def eps_safe(V, family: KatoFamily) -> float:
    """Heuristic radius inside which the branches stay separated and pairable.

    min(eta / (4||V||), eta * eta_sub / (4||V||^2), eta^2 * eta_sub2 / (4||V||^3))
    with eta the gap of H, eta_sub the smallest first-order splitting and
    eta_sub2 the smallest second-order splitting.
    """
    vnorm = op_norm(V)
    if vnorm == 0:
        return float("inf")
    eta = family.dec.gap
    if not np.isfinite(eta):
        # single cluster: only first-order splitting, no coupling to other clusters
        sub = family.sub_gap
        return float(sub / (4 * vnorm)) if np.isfinite(sub) else float("inf")
    out = eta / (4 * vnorm)
    sub = family.sub_gap
    if np.isfinite(sub):
        out = min(out, eta * sub / (4 * vnorm**2))
    sub2 = family.sub_gap2
    if np.isfinite(sub2):
        out = min(out, eta**2 * sub2 / (4 * vnorm**3))
    return float(out)


def _assign(vecs: np.ndarray, family: KatoFamily) -> np.ndarray:
    overlaps = np.stack([np.sum(np.abs(B.conj().T @ vecs) ** 2, axis=0) for B in family.bases])
    return np.argmax(overlaps, axis=0)


def _overlap_matrix(vecs, family):
    return np.stack([np.sum(np.abs(B.conj().T @ vecs) ** 2, axis=0) for B in family.bases])


def _group_eigenvectors(w, v, family: KatoFamily):
    # greedy by descending overlap, each subprojection taking exactly rank-many eigenvectors
    ov = _overlap_matrix(v, family)
    owner = np.full(v.shape[1], -1)
    room = np.array(family.ranks)
    for flat in np.argsort(-ov, axis=None, kind="stable"):
        i, j = np.unravel_index(flat, ov.shape)
        if owner[j] < 0 and room[i] > 0:
            owner[j] = i
            room[i] -= 1
    min_overlap = float(ov[owner, np.arange(len(owner))].min())
    if min_overlap < 1e-12:
        raise PairingError("an eigenvector of H(eps) has no overlap with its assigned subprojection")
    return owner, min_overlap


def _inv_sqrt_one_minus(R: np.ndarray) -> np.ndarray:
    r, q = np.linalg.eigh(_herm(R))
    return (q * (1.0 / np.sqrt(1.0 - np.clip(r, 0.0, None)))) @ q.conj().T


def kato_unitary(H, V, eps: float, family: KatoFamily, cluster_tol: float | None = None) -> KatoUnitary:
    """Kato's intertwining unitary at a given eps.

    Eigenvectors of H(eps) are assigned greedily by descending overlap
    with the subprojections, each taking as many as its rank.

    Raises
    ------
    PairingError
        If an assigned eigenvector is orthogonal to its subprojection.
    EpsilonTooLargeError
        If some ``||R_n(eps)|| >= 1``.
    """
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    n = H.shape[0]
    P0 = family.subprojections
    if eps == 0:
        return KatoUnitary(0.0, np.eye(n, dtype=np.complex128), 0.0, family, P0,
                           family.dec.values[family.parent].copy(), 1.0, 0.0, 0.0,
                           family.dec.eigenvalues, family.dec.eigenvectors)
    Heps = H + eps * V
    w, v = hermitian_eig(Heps)
    owner, min_overlap = _group_eigenvectors(w, v, family)
    if min_overlap <= 0.5:
        log.warning("eps=%g: weakest pairing overlap %.3f <= 0.5", eps, min_overlap)
    U = np.zeros((n, n), dtype=np.complex128)
    Peps, hvals, rmax = [], [], 0.0
    for i, P in enumerate(P0):
        vi = v[:, owner == i]
        Q = vi @ vi.conj().T
        D = Q - P
        R = D @ D
        rn = op_norm(R)
        rmax = max(rmax, rn)
        if rn >= 1.0:
            raise EpsilonTooLargeError(eps, rn)
        U += Q @ P @ _inv_sqrt_one_minus(R)
        Peps.append(Q)
        hvals.append(float(w[owner == i].mean()))
    eye = np.eye(n)
    unit_res = float(np.linalg.norm(U.conj().T @ U - eye))
    inter_res = max(float(np.linalg.norm(U @ P @ U.conj().T - Q)) for P, Q in zip(P0, Peps))
    if unit_res > 1e-8 or inter_res > 1e-8:
        log.warning("eps=%g: Kato unitary residuals %.2e / %.2e", eps, unit_res, inter_res)
    return KatoUnitary(float(eps), U, float(rmax), family, Peps, np.array(hvals), min_overlap,
                       unit_res, inter_res, w, v)


def block_diagonal_approx(H, V, eps: float, family: KatoFamily,
                          kato: KatoUnitary | None = None) -> np.ndarray:
    """H~(eps) = U^dag H(eps) U = sum_n h_n(eps) P_n(0).

    Blocks whose eigenvalues of H(eps) are not degenerate (residual
    degeneracy) keep the compressed block P_n(0) U^dag H(eps) U P_n(0).
    """
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    if kato is None:
        kato = kato_unitary(H, V, eps, family)
    U = kato.matrix
    full = U.conj().T @ (H + eps * V) @ U
    tol = 1e-9 * max(1.0, op_norm(H))
    out = np.zeros_like(full)
    owner = None if eps == 0 else _group_eigenvectors(kato.eigenvalues, kato.eigenvectors, family)[0]
    for i, P in enumerate(family.subprojections):
        if owner is None:
            vals = np.array([kato.branch_values[i]])
        else:
            vals = kato.eigenvalues[owner == i]
        if vals.max() - vals.min() <= tol:
            out += kato.branch_values[i] * P
        else:
            out += P @ full @ P
    return _herm(out)


def adiabatic_invariant(S, kato: KatoUnitary, tol: float | None = None) -> np.ndarray:
    """S_eps = U(eps) S U(eps)^dag for a robust symmetry S.

    Raises
    ------
    NotRobustError
        If S fails to commute with some P_n(0).
    """
    S = as_matrix(S, "S")
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.linalg.norm(S)))
    norms = kato.family.commutator_norms(S)
    worst = int(np.argmax(norms))
    if norms[worst] > tol:
        raise NotRobustError(worst, float(norms[worst]))
    U = kato.matrix
    return U @ S @ U.conj().T


# -- numerical-limit oracle -------------------------------------------------

def _split_threshold(eps, vnorm, eta, scale):
    floor = 1e-11 * scale
    if np.isfinite(eta):
        return max((eps * vnorm) ** 2.5 / eta**1.5, floor)
    return max(1e-6 * eps * vnorm, floor)


def _groups_at(H, V, eps, dec, vnorm):
    w, v = hermitian_eig(H + eps * V)
    if np.isfinite(dec.gap) and eps * vnorm >= dec.gap / 2:
        raise OracleUnstableError(
            f"eps={eps:g}: eps*||V|| >= eta/2, cluster membership not guaranteed"
        )
    scale = max(1.0, op_norm(H), vnorm)
    thr = _split_threshold(eps, vnorm, dec.gap, scale)
    groups = []  # (parent, projection, mean eigenvalue, spread)
    start = 0
    for k, r in enumerate(dec.multiplicities):
        wk = w[start:start + r]
        vk = v[:, start:start + r]
        lab = np.zeros(r, dtype=int)
        if r > 1:
            lab[1:] = np.cumsum(np.diff(wk) > thr)
        for g in range(lab[-1] + 1):
            sel = lab == g
            B = vk[:, sel]
            groups.append((k, B @ B.conj().T, float(wk[sel].mean()),
                           float(wk[sel].max() - wk[sel].min()), int(sel.sum())))
        start += r
    return groups


def _pair_greedy(A: Sequence[np.ndarray], B: Sequence[np.ndarray]) -> list[int]:
    """perm with B[perm[i]] best matching A[i], greedy on trace overlaps."""
    ov = np.array([[np.trace(a @ b).real for b in B] for a in A])
    perm = [-1] * len(A)
    used = set()
    for flat in np.argsort(-ov, axis=None):
        i, j = divmod(int(flat), len(B))
        if perm[i] < 0 and j not in used:
            perm[i] = j
            used.add(j)
    return perm


def _lagrange_at_zero(xs: Sequence[float]) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    wts = np.ones(len(xs))
    for i in range(len(xs)):
        for j in range(len(xs)):
            if i != j:
                wts[i] *= xs[j] / (xs[j] - xs[i])
    return wts


def _nearest_projection(M: np.ndarray, rank: int) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(M))
    B = v[:, -rank:]
    return B


def subprojections_numerical(H, V, eps_sequence: Sequence[float] = (1e-2, 1e-3, 1e-4),
                             dec: SpectralDecomposition | None = None,
                             consistency_tol: float = 1e-5) -> KatoFamily:
    """Subprojections P_n(0) as the eps -> 0 limit of eigenprojections of H + eps V.

    At every eps the sorted eigenvalues are partitioned by parent cluster
    (Weyl's inequality keeps them in order while eps ||V|| < eta / 2) and
    sub-clustered at gaps above (eps ||V||)^2.5 / eta^1.5, which separates
    first- and second-order splittings from higher-order ones. Groups are
    matched across the sequence by overlap and extrapolated to eps = 0 by
    polynomial interpolation; the extrapolation from the two smallest eps
    must agree with the full one to ``consistency_tol``.

    Raises
    ------
    OracleUnstableError
        On structure changes along the sequence or inconsistent extrapolation.
    """
    H = as_hermitian(H, "H")
    V = as_hermitian(V, "V")
    eps_sequence = sorted((float(e) for e in eps_sequence), reverse=True)
    if not eps_sequence or eps_sequence[-1] <= 0:
        raise ValueError("eps_sequence must hold positive values")
    if dec is None:
        dec = decompose(H)
    vnorm = op_norm(V)
    per_eps = [_groups_at(H, V, e, dec, vnorm) for e in eps_sequence]
    ref = per_eps[-1]
    shape = sorted((g[0], g[4]) for g in ref)
    aligned = []
    for e, groups in zip(eps_sequence, per_eps):
        if sorted((g[0], g[4]) for g in groups) != shape:
            raise OracleUnstableError(
                f"group structure at eps={e:g} differs from eps={eps_sequence[-1]:g}; "
                "possible avoided crossing inside the sweep"
            )
        perm = _pair_greedy([g[1] for g in ref], [g[1] for g in groups])
        aligned.append([groups[j] for j in perm])

    xs = np.array(eps_sequence)
    wts = _lagrange_at_zero(xs)
    wts_tail = _lagrange_at_zero(xs[-2:]) if len(xs) >= 2 else None
    bases, parent, slopes, second, order, residual = [], [], [], [], [], []
    eta = dec.gap if np.isfinite(dec.gap) else 1.0
    for i, g_ref in enumerate(ref):
        k, rank = g_ref[0], g_ref[4]
        mats = [a[i][1] for a in aligned]
        P0 = sum(wt * M for wt, M in zip(wts, mats))
        if wts_tail is not None:
            P0_tail = sum(wt * M for wt, M in zip(wts_tail, mats[-2:]))
            if np.linalg.norm(P0 - P0_tail) > consistency_tol:
                raise OracleUnstableError(
                    f"extrapolation of group {i} inconsistent: {np.linalg.norm(P0 - P0_tail):.2e}"
                )
        bases.append(_nearest_projection(P0, rank))
        parent.append(k)
        sl = np.array([(a[i][2] - dec.values[k]) / e for a, e in zip(aligned, xs)])
        slopes.append(float(np.dot(wts, sl)))
        # slope(eps) = s1 + c2*eps + ...: the eps-linear coefficient is the second-order term
        second.append(float((sl[-2] - sl[-1]) / (xs[-2] - xs[-1])) if len(xs) >= 2 else np.nan)
        residual.append(rank > 1 and g_ref[3] > 1e-10 * max(1.0, op_norm(H), vnorm))
    slopes = np.array(slopes)
    emin = xs[-1]
    for i in range(len(ref)):
        sib = [j for j in range(len(ref)) if j != i and parent[j] == parent[i]]
        sep = min((abs(slopes[i] - slopes[j]) for j in sib), default=np.inf)
        order.append(1 if sep > 100 * emin * max(1.0, vnorm**2 / eta) else 2)

    idx = sorted(range(len(ref)), key=lambda i: (parent[i], slopes[i], second[i]))
    return KatoFamily([bases[i] for i in idx], [parent[i] for i in idx], slopes[idx],
                      np.array(second)[idx], [order[i] for i in idx],
                      [residual[i] for i in idx], dec)


def match_families(a: KatoFamily, b: KatoFamily) -> tuple[list[int], float]:
    """Pair the subprojections of two families; returns (perm, max Frobenius gap)."""
    Pa, Pb = a.subprojections, b.subprojections
    if sorted(a.ranks) != sorted(b.ranks) or len(Pa) != len(Pb):
        return [], float("inf")
    perm = _pair_greedy(Pa, Pb)
    worst = max(float(np.linalg.norm(P - Pb[j])) for P, j in zip(Pa, perm))
    return perm, worst
