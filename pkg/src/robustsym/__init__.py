"""Robust and fragile symmetries of finite-dimensional Hamiltonians under H + eps V."""

__version__ = "0.1.0"

from .algebra import OperatorAlgebra, bicommutant, commutant, contains, equal, intersect
from .dynamics import (
    TimeSamplingPlan,
    WanderingRangeEstimate,
    eternal_gap,
    exponent_fit,
    finite_dim_bound,
    wandering_range,
)
from .kato import KatoFamily, adiabatic_invariant, eps_safe, kato_unitary, subprojections
from .robustness import (
    classify,
    classify_commuting,
    completely_robust_test,
    is_symmetry,
    robust_algebra,
    robust_algebra_restricted,
)
from .spectral import SpectralDecomposition, decompose

__all__ = [
    "OperatorAlgebra",
    "bicommutant",
    "commutant",
    "contains",
    "equal",
    "intersect",
    "TimeSamplingPlan",
    "WanderingRangeEstimate",
    "eternal_gap",
    "exponent_fit",
    "finite_dim_bound",
    "wandering_range",
    "KatoFamily",
    "adiabatic_invariant",
    "eps_safe",
    "kato_unitary",
    "subprojections",
    "classify",
    "classify_commuting",
    "completely_robust_test",
    "is_symmetry",
    "robust_algebra",
    "robust_algebra_restricted",
    "SpectralDecomposition",
    "decompose",
]
