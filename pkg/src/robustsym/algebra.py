"""
Finite-dimensional operator algebras: commutants, bicommutants, membership,
equality, intersection and random Hermitian elements.

An algebra is stored as a Frobenius-orthonormal basis of its complex linear
span. Commutants are computed as the nullspace of the stacked commutator
maps X -> [G_i, X]; closure under products is automatic for commutants and
is property-tested rather than enforced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSamplingError
from .numkernel import DEFAULT_RANK_TOL, as_matrix, commutator_map, nullspace_basis, op_norm

__all__ = [
    "OperatorAlgebra",
    "full_algebra",
    "span",
    "commutant",
    "bicommutant",
    "contains",
    "equal",
    "is_subalgebra",
    "intersect",
    "hermitian_basis",
    "sample_hermitian",
]


@dataclass(frozen=True)
class OperatorAlgebra:
    n: int
    basis: np.ndarray  # shape (d, n, n), orthonormal in <X,Y> = tr(X^dag Y)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    def matrix(self) -> np.ndarray:
        """Basis as columns of an (n*n, d) matrix of row-major vecs."""
        return self.basis.reshape(self.dimension, -1).T

    def project(self, X) -> np.ndarray:
        M = self.matrix()
        x = np.asarray(X, dtype=np.complex128).ravel()
        return (M @ (M.conj().T @ x)).reshape(self.n, self.n)

    def adjoint_defect(self) -> float:
        """Largest distance of a basis element's adjoint to the span."""
        if self.dimension == 0:
            return 0.0
        return max(
            float(np.linalg.norm(B.conj().T - self.project(B.conj().T))) for B in self.basis
        )


def full_algebra(n: int) -> OperatorAlgebra:
    return OperatorAlgebra(n, np.eye(n * n, dtype=np.complex128).reshape(n * n, n, n))


def span(matrices: Sequence, tol: float = DEFAULT_RANK_TOL) -> OperatorAlgebra:
    """Orthonormalized linear span of the given matrices (no closure taken)."""
    mats = [as_matrix(M) for M in matrices]
    n = mats[0].shape[0]
    A = np.stack([M.ravel() for M in mats], axis=1)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.count_nonzero(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return OperatorAlgebra(n, u[:, :rank].T.reshape(rank, n, n))


def commutant(generators: Sequence, tol: float = DEFAULT_RANK_TOL, n: int | None = None) -> OperatorAlgebra:
    """All X with [X, G] = 0 for every generator G.

    An empty generator list yields the full matrix algebra (pass ``n``).
    """
    gens = [as_matrix(G) for G in generators]
    if not gens:
        if n is None:
            raise ValueError("dimension n required for an empty generator set")
        return full_algebra(n)
    n = gens[0].shape[0]
    if any(G.shape[0] != n for G in gens):
        raise ValueError("generators must share one dimension")
    L = np.vstack([commutator_map(G) for G in gens])
    scale = max(float(np.linalg.norm(G)) for G in gens)
    return OperatorAlgebra(n, nullspace_basis(L, n, tol, scale))


def bicommutant(generators: Sequence, tol: float = DEFAULT_RANK_TOL, n: int | None = None) -> OperatorAlgebra:
    first = commutant(generators, tol, n)
    return commutant(list(first.basis), tol, first.n)


def contains(A: OperatorAlgebra, X, tol: float = 1e-8) -> tuple[bool, float]:
    """Membership test; returns ``(inside, residual)`` with the Frobenius residual."""
    X = as_matrix(X)
    if X.shape[0] != A.n:
        raise ValueError("dimension mismatch")
    residual = float(np.linalg.norm(X - A.project(X)))
    return residual <= tol * max(1.0, float(np.linalg.norm(X))), residual


def is_subalgebra(A: OperatorAlgebra, B: OperatorAlgebra, tol: float = 1e-8) -> tuple[bool, float]:
    """Span containment A <= B; returns the worst basis residual."""
    worst = 0.0
    for X in A.basis:
        worst = max(worst, contains(B, X, tol)[1])
    return worst <= tol, worst


def equal(A: OperatorAlgebra, B: OperatorAlgebra, tol: float = 1e-8) -> bool:
    if A.n != B.n or A.dimension != B.dimension:
        return False
    return is_subalgebra(A, B, tol)[0] and is_subalgebra(B, A, tol)[0]


def intersect(algebras: Sequence[OperatorAlgebra], tol: float = DEFAULT_RANK_TOL) -> OperatorAlgebra:
    """Intersection of spans via the nullspace of stacked complementary projectors."""
    algebras = list(algebras)
    if not algebras:
        raise ValueError("need at least one algebra")
    n = algebras[0].n
    eye = np.eye(n * n, dtype=np.complex128)
    blocks = []
    for A in algebras:
        M = A.matrix()
        blocks.append(eye - M @ M.conj().T)
    return OperatorAlgebra(n, nullspace_basis(np.vstack(blocks), n, tol, 1.0))


def hermitian_basis(A: OperatorAlgebra, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Real-orthonormal basis of the Hermitian elements of a *-closed algebra."""
    cands = []
    for B in A.basis:
        cands.append(0.5 * (B + B.conj().T))
        cands.append(0.5j * (B.conj().T - B))
    # real coordinates of Hermitian matrices; the trace inner product is real there
    R = np.stack([np.concatenate([C.real.ravel(), C.imag.ravel()]) for C in cands], axis=1)
    u, s, _ = np.linalg.svd(R, full_matrices=False)
    rank = int(np.count_nonzero(s > tol * s[0])) if s.size and s[0] > 0 else 0
    n2 = A.n * A.n
    out = u[:, :rank].T
    return (out[:, :n2] + 1j * out[:, n2:]).reshape(rank, A.n, A.n)


def sample_hermitian(A: OperatorAlgebra, seed: int, traceless: bool = False) -> np.ndarray:
    """Random Hermitian element of a *-closed algebra with operator norm 1.

    A real Gaussian combination of a Hermitian basis, sign-fixed so that the
    trace is non-negative (the law of V and -V is the same anyway). With
    ``traceless=True`` the identity component is removed first.
    """
    rng = np.random.default_rng(seed)
    basis = hermitian_basis(A)
    X = np.tensordot(rng.standard_normal(len(basis)), basis, axes=1)
    if traceless:
        X = X - np.trace(X).real / A.n * np.eye(A.n)
        if op_norm(X) <= 1e-12:
            raise DegenerateSamplingError(
                "algebra has no Hermitian element outside multiples of the identity"
            )
    X = 0.5 * (X + X.conj().T)
    if np.trace(X).real < 0:
        X = -X
    return X / op_norm(X)
