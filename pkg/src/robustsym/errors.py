"""Exception types raised across the package."""

from __future__ import annotations


class RobustSymError(Exception):
    """Base class for all package errors."""


class NotHermitianError(RobustSymError, ValueError):
    def __init__(self, residual: float, bound: float, name: str = "matrix"):
        self.residual = residual
        self.bound = bound
        super().__init__(
            f"{name} is not Hermitian: ||A - A^dag||_F = {residual:.3e} > {bound:.3e}"
        )


class EigenSolverError(RobustSymError, ArithmeticError):
    """The dense Hermitian eigensolver failed to converge."""


class NonCommutingError(RobustSymError, ValueError):
    def __init__(self, residual: float, bound: float, what: str = "inputs"):
        self.residual = residual
        self.bound = bound
        super().__init__(f"{what} do not commute: residual {residual:.3e} > {bound:.3e}")


class NotASymmetryError(NonCommutingError):
    def __init__(self, residual: float, bound: float):
        super().__init__(residual, bound, what="S and H")


class NotRobustError(RobustSymError, ValueError):
    """S fails to commute with a Kato subprojection."""

    def __init__(self, index: int, residual: float):
        self.index = index
        self.residual = residual
        super().__init__(
            f"S does not commute with subprojection P_{index}(0): residual {residual:.3e}"
        )


class EpsilonTooLargeError(RobustSymError, ValueError):
    def __init__(self, eps: float, r_norm: float):
        self.eps = eps
        self.r_norm = r_norm
        super().__init__(
            f"eps={eps:g} is outside the perturbative neighbourhood: max ||R_n|| = {r_norm:.3f} >= 1"
        )


class PairingError(RobustSymError, ValueError):
    """Eigenvectors of H + eps V could not be matched to the subprojection family."""


class OracleUnstableError(RobustSymError, ArithmeticError):
    """The eps -> 0 extrapolation is inconsistent across the eps sequence."""


class DegenerateSamplingError(RobustSymError, ValueError):
    """The algebra has no traceless Hermitian direction to sample from."""


class CutoffTooSmallError(RobustSymError, ValueError):
    def __init__(self, cutoff: float, required: float):
        self.cutoff = cutoff
        self.required = required
        super().__init__(
            f"tail bound not attainable with cutoff X={cutoff:g}; need X >= {required:.6g}"
        )
