"""
Spectral decomposition of Hermitian matrices into clustered eigenvalues.

``decompose`` groups eigenvalues by single linkage: consecutive (sorted)
eigenvalues closer than ``cluster_tol`` belong to the same cluster. Each
cluster k carries its mean value h_k, its eigenprojection P_k and an
orthonormal basis of Range(P_k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonCommutingError
from .numkernel import as_hermitian, as_matrix, commutator, hermitian_eig, op_norm

__all__ = [
    "SpectralDecomposition",
    "default_cluster_tol",
    "decompose",
    "cluster_values",
    "is_function_of_H",
    "joint_decompose",
]


@dataclass(frozen=True)
class SpectralDecomposition:
    """H = sum_k values[k] * projections[k].

    ``gap`` is the minimal distance between distinct cluster values, or
    ``inf`` when there is a single cluster. ``ambiguous`` is set when some
    cluster's eigenvalue chain spans more than ten times ``cluster_tol``.
    """

    values: np.ndarray
    projections: list[np.ndarray]
    multiplicities: list[int]
    gap: float
    cluster_tol: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: np.ndarray
    ambiguous: bool = False
    bases: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def dim(self) -> int:
        return int(self.eigenvectors.shape[0])

    @property
    def count(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return sum(h * P for h, P in zip(self.values, self.projections))


def default_cluster_tol(H) -> float:
    return 1e-8 * max(1.0, op_norm(H))


def cluster_values(w: np.ndarray, tol: float) -> tuple[np.ndarray, bool]:
    """Single-linkage labels for ascending values ``w`` and the ambiguity flag."""
    labels = np.zeros(len(w), dtype=int)
    if len(w) > 1:
        labels[1:] = np.cumsum(np.diff(w) > tol)
    ambiguous = False
    for k in range(labels[-1] + 1 if len(w) else 0):
        chunk = w[labels == k]
        if chunk[-1] - chunk[0] > 10 * tol:
            ambiguous = True
    return labels, ambiguous


def decompose(H, cluster_tol: float | None = None) -> SpectralDecomposition:
    H = as_hermitian(H, "H")
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(H)
    if cluster_tol <= 0:
        raise ValueError("cluster_tol must be positive")
    w, v = hermitian_eig(H)
    labels, ambiguous = cluster_values(w, cluster_tol)
    values, projections, mults, bases = [], [], [], []
    for k in range(labels[-1] + 1):
        sel = labels == k
        B = v[:, sel]
        values.append(float(w[sel].mean()))
        projections.append(B @ B.conj().T)
        mults.append(int(sel.sum()))
        bases.append(B)
    values = np.array(values)
    gap = float(np.min(np.diff(values))) if len(values) > 1 else float("inf")
    return SpectralDecomposition(
        values=values,
        projections=projections,
        multiplicities=mults,
        gap=gap,
        cluster_tol=float(cluster_tol),
        eigenvalues=w,
        eigenvectors=v,
        labels=labels,
        ambiguous=ambiguous,
        bases=bases,
    )


def is_function_of_H(S, dec: SpectralDecomposition, tol: float | None = None):
    """Test whether S is block-scalar on the eigenspaces of H.

    Returns ``(ok, coefficients)`` with s_k = tr(P_k S) / r_k; ``ok`` is
    true when ``||S - sum_k s_k P_k||_F <= tol`` (default
    ``1e-8 * max(1, ||S||_F)``).
    """
    S = as_matrix(S, "S")
    if S.shape[0] != dec.dim:
        raise ValueError("S and H dimensions differ")
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.linalg.norm(S)))
    coeffs = np.array(
        [np.trace(P @ S) / r for P, r in zip(dec.projections, dec.multiplicities)]
    )
    residual = np.linalg.norm(S - sum(c * P for c, P in zip(coeffs, dec.projections)))
    return bool(residual <= tol), coeffs


def joint_decompose(H, J, tol: float = 1e-9, cluster_tol: float | None = None) -> list[np.ndarray]:
    """Common eigenprojections Q_k of two commuting Hermitian matrices.

    J is diagonalized inside each eigenspace of H; its eigenvalues there
    are clustered with the default tolerance for J. The returned list is
    ordered by (cluster of H, eigenvalue of J).
    """
    H = as_hermitian(H, "H")
    J = as_hermitian(J, "J")
    residual = float(np.linalg.norm(commutator(H, J)))
    bound = tol * float(np.linalg.norm(H)) * float(np.linalg.norm(J))
    if residual > bound:
        raise NonCommutingError(residual, bound, what="H and J")
    dec = decompose(H, cluster_tol)
    jtol = default_cluster_tol(J)
    out = []
    for B in dec.bases:
        Jk = B.conj().T @ J @ B
        w, u = hermitian_eig(0.5 * (Jk + Jk.conj().T))
        labels, _ = cluster_values(w, jtol)
        for m in range(labels[-1] + 1):
            C = B @ u[:, labels == m]
            out.append(C @ C.conj().T)
    return out
