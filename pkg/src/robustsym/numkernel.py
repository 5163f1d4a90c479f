"""
Dense complex linear-algebra primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. The
helpers here validate shape, finiteness and (where asked) Hermiticity, and
provide a deterministic eigensolver, the propagator ``exp(-itH)`` and the
SVD nullspace routine used to build commutants.

Vectorization convention: an n x n matrix X is flattened row-major, so the
Frobenius inner product <X, Y> = tr(X^dag Y) equals ``np.vdot(X.ravel(), Y.ravel())``
and vec(A X B) = (A kron B^T) vec(X).
"""

from __future__ import annotations

import numpy as np

from .errors import EigenSolverError, NotHermitianError

__all__ = [
    "as_matrix",
    "as_hermitian",
    "is_hermitian",
    "hermitian_eig",
    "unitary_exp",
    "nullspace_basis",
    "commutator",
    "commutator_map",
    "frob",
    "op_norm",
    "DEFAULT_RANK_TOL",
]

DEFAULT_RANK_TOL = 1e-9


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a finite square complex128 array."""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _herm_defect(M: np.ndarray) -> tuple[float, float]:
    residual = float(np.linalg.norm(M - M.conj().T))
    bound = 1e-12 * (1.0 + float(np.linalg.norm(M)))
    return residual, bound


def is_hermitian(A) -> bool:
    residual, bound = _herm_defect(as_matrix(A))
    return residual <= bound


def as_hermitian(A, name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity and return the exactly symmetrized matrix.

    Raises
    ------
    NotHermitianError
        If ``||A - A^dag||_F > 1e-12 (1 + ||A||_F)``.
    """
    M = as_matrix(A, name)
    residual, bound = _herm_defect(M)
    if residual > bound:
        raise NotHermitianError(residual, bound, name)
    return 0.5 * (M + M.conj().T)


def frob(A) -> float:
    return float(np.linalg.norm(A))


def op_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # first component above the noise floor of each column made real positive
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        idx = np.flatnonzero(mags > 1e-10 * mags.max())
        if idx.size:
            c = col[idx[0]]
            out[:, j] = col * (abs(c) / c)
    return out


def hermitian_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending eigenvalues and a unitary matrix whose columns are the
    eigenvectors, with the first nonzero component of each column made real
    and positive so repeated calls give identical output.
    """
    M = as_hermitian(A)
    try:
        w, v = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"Hermitian eigensolver (LAPACK heevd, internal iteration budget) failed: {exc}"
        ) from exc
    return w, _fix_phases(v)


def unitary_exp(H, t: float) -> np.ndarray:
    """The propagator ``exp(-i t H)`` for Hermitian ``H``."""
    w, v = hermitian_eig(H)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def commutator_map(G) -> np.ndarray:
    """Matrix of ``X -> G X - X G`` acting on row-major vec(X)."""
    G = np.asarray(G, dtype=np.complex128)
    n = G.shape[0]
    eye = np.eye(n)
    return np.kron(G, eye) - np.kron(eye, G.T)


def nullspace_basis(L, n: int, tol: float = DEFAULT_RANK_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the (numerical) kernel of a map on n x n matrices.

    Parameters
    ----------
    L : array, shape (m, n*n)
        The map acting on row-major vectorized matrices. ``m`` may be 0.
    n : int
        Matrix dimension.
    tol : float
        Relative threshold: singular values ``<= tol * max(s_max, scale)``
        count as zero.
    scale : float
        Size of the operator the map was built from. A map that is pure
        roundoff (e.g. commutation with a multiple of the identity) then has
        an empty range instead of a noise-defined one.

    Returns
    -------
    basis : array, shape (d, n, n)
        Frobenius-orthonormal matrices spanning the kernel.
    """
    L = np.asarray(L, dtype=np.complex128).reshape(-1, n * n)
    if L.shape[0] == 0:
        return np.eye(n * n, dtype=np.complex128).reshape(n * n, n, n)
    _, s, vh = np.linalg.svd(L, full_matrices=True)
    ref = max(s[0] if s.size else 0.0, scale)
    rank = int(np.count_nonzero(s > tol * ref)) if ref > 0 else 0
    null = vh[rank:].conj()
    return null.reshape(-1, n, n)
