import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import SX, SY, SZ
from corpus import planted_H, random_hermitian
from robustsym.algebra import (
    bicommutant,
    commutant,
    contains,
    equal,
    full_algebra,
    intersect,
    is_subalgebra,
    sample_hermitian,
    span,
)
from robustsym.errors import DegenerateSamplingError
from robustsym.spectral import decompose

I2 = np.eye(2)
seeds = st.integers(0, 2**31 - 1)


@pytest.mark.parametrize("gens, dim", [
    ([np.diag([0.0, 1.0])], 2),
    ([SX, SZ], 1),
    ([np.diag([0.0, 0.0, 1.0])], 5),
])
def test_commutant_dimensions(gens, dim):
    A = commutant(gens)
    assert A.dimension == dim
    assert A.adjoint_defect() <= 1e-8
    assert contains(A, np.eye(gens[0].shape[0]))[0]


def test_empty_commutant_is_full():
    assert commutant([], n=3).dimension == 9


@pytest.mark.parametrize("gens, dim", [
    ([np.diag([0.0, 0.0, 1.0])], 2),
    ([SX], 2),
    ([SX, SZ], 4),
])
def test_bicommutant_dimensions(gens, dim):
    assert bicommutant(gens).dimension == dim


def test_bicommutant_of_sigma_x_is_its_span():
    assert equal(bicommutant([SX]), span([I2, SX]))


def test_contains_examples():
    H = np.diag([0.0, 0.0, 1.0])
    B = bicommutant([H])
    for P in decompose(H).projections:
        assert contains(B, P)[0]
    ok, res = contains(commutant([SX, SZ]), SY)
    assert not ok and np.isclose(res, np.sqrt(2))


def test_equal_examples():
    A = span([I2, SZ])
    assert equal(A, A)
    assert equal(A, span([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    assert not equal(span([I2]), A)


def test_intersect_examples():
    A = span([I2, SZ])
    assert equal(intersect([A, A]), A)
    C = intersect([A, span([I2, SX])])
    assert C.dimension == 1 and contains(C, I2)[0]


def test_sample_hermitian_examples():
    assert np.allclose(sample_hermitian(span([np.eye(3)]), 7), np.eye(3))
    X = sample_hermitian(commutant([np.diag([0.0, 1.0])]), 3)
    assert np.allclose(X, np.diag(np.diag(X)))
    Y = sample_hermitian(full_algebra(4), 11)
    assert np.allclose(Y, Y.conj().T)
    assert np.isclose(np.linalg.norm(Y, 2), 1.0)
    assert np.allclose(Y, sample_hermitian(full_algebra(4), 11))


def test_traceless_sampling_of_scalars_is_flagged():
    with pytest.raises(DegenerateSamplingError):
        sample_hermitian(span([np.eye(2)]), 0, traceless=True)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_bicommutant_is_stable(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    gens = [random_hermitian(rng, n) for _ in range(int(rng.integers(1, 3)))]
    if rng.random() < 0.5:
        H, _ = planted_H(rng, n_max=6)
        gens = [H]
    B = bicommutant(gens)
    assert equal(bicommutant(list(B.basis)), B)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_commutant_of_H_equals_commutant_of_projections(seed):
    H, mults = planted_H(np.random.default_rng(seed))
    A = commutant([H])
    assert equal(A, commutant(decompose(H).projections))
    assert A.dimension == sum(r * r for r in mults)
    assert bicommutant([H]).dimension == len(mults)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_commutant_reparametrization_invariance(seed):
    H, _ = planted_H(np.random.default_rng(seed))
    f = H @ H @ H + H  # x^3 + x is injective
    assert equal(commutant([H]), commutant([f]))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_commutant_closed_under_products_and_adjoints(seed):
    rng = np.random.default_rng(seed)
    H, _ = planted_H(rng)
    A = commutant([H])
    X = np.tensordot(rng.normal(size=A.dimension), A.basis, axes=1)
    Y = np.tensordot(rng.normal(size=A.dimension), A.basis, axes=1)
    assert contains(A, X @ Y)[0]
    assert contains(A, X.conj().T)[0]
    ok, _ = is_subalgebra(bicommutant([H]), A)
    assert ok


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_intersection_contains_identity_and_is_contained(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    algs = [commutant([random_hermitian(rng, n)]) for _ in range(3)]
    C = intersect(algs)
    assert contains(C, np.eye(n))[0]
    for A in algs:
        assert is_subalgebra(C, A)[0]
