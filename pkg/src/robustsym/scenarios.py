"""
Built-in model instances.

* ``degenerate_diag``: diagonal H with planted degeneracies and a hopping
  perturbation inside every degenerate block.
* ``truncated_oscillator``: the harmonic oscillator H = diag(n + 1/2) on the
  lowest N Fock states with V = p.
* ``oscillator_alpha_integral``: the lower bound g(eps, alpha) for the
  wandering range of (1 - parity)/2 on psi_alpha(x) = (1 + x^2)^(-alpha/4),

      g^2 = int_R sin^2(2 eps x) / (1 + x^2)^(alpha/2) dx,

  by adaptive Simpson on [-X, X] plus a controlled tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import exponent_fit
from .errors import CutoffTooSmallError
from .numkernel import hermitian_eig, unitary_exp
from .quadrature import adaptive_simpson

__all__ = [
    "ModelInstance",
    "AlphaIntegral",
    "degenerate_diag",
    "truncated_oscillator",
    "ladder_operators",
    "oscillator_alpha_integral",
    "oscillator_alpha_exponent",
    "oscillator_norm_ratio",
    "oscillator_shift_check",
    "SCENARIOS",
]


@dataclass
class ModelInstance:
    name: str
    H: np.ndarray
    V: np.ndarray
    symmetries: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)


def _hopping(r: int) -> np.ndarray:
    T = np.zeros((r, r))
    idx = np.arange(r - 1)
    T[idx, idx + 1] = T[idx + 1, idx] = 1.0
    return T


def degenerate_diag(multiplicities=(2, 1), values=(0.0, 1.0)) -> ModelInstance:
    """Diagonal H with the given degeneracies.

    V is the nearest-neighbour hopping matrix inside each degenerate block
    (sigma_x for a doublet). Bundled symmetries: the eigenprojections
    ``P{k}``, for each degenerate block a reversal permutation ``flip{k}``
    and an alternating sign ``sign{k}`` (identity elsewhere), and ``I``.
    """
    mults = [int(r) for r in multiplicities]
    vals = [float(v) for v in values]
    if len(mults) != len(vals) or any(r <= 0 for r in mults):
        raise ValueError("need one positive multiplicity per value")
    if len(set(vals)) != len(vals):
        raise ValueError("values must be distinct")
    n = sum(mults)
    H = np.diag(np.repeat(vals, mults)).astype(np.complex128)
    V = np.zeros((n, n), dtype=np.complex128)
    sym: dict[str, np.ndarray] = {"I": np.eye(n, dtype=np.complex128)}
    start = 0
    for k, r in enumerate(mults):
        sl = slice(start, start + r)
        P = np.zeros((n, n), dtype=np.complex128)
        P[sl, sl] = np.eye(r)
        sym[f"P{k}"] = P
        if r > 1:
            V[sl, sl] = _hopping(r)
            flip = np.eye(n, dtype=np.complex128)
            flip[sl, sl] = np.eye(r)[::-1]
            sym[f"flip{k}"] = flip
            sign = np.eye(n, dtype=np.complex128)
            sign[sl, sl] = np.diag((-1.0) ** np.arange(r))
            sym[f"sign{k}"] = sign
        start += r
    return ModelInstance("degenerate-diag", H, V, sym,
                         {"multiplicities": mults, "values": vals})


def ladder_operators(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated annihilation operator a and x = (a + a^dag)/sqrt2, p = i(a^dag - a)/sqrt2."""
    a = np.diag(np.sqrt(np.arange(1, N)), k=1).astype(np.complex128)
    ad = a.conj().T
    x = (a + ad) / math.sqrt(2)
    p = 1j * (ad - a) / math.sqrt(2)
    return a, x, p


def truncated_oscillator(N: int = 60) -> ModelInstance:
    if N < 4:
        raise ValueError("oscillator truncation needs N >= 4")
    n = np.arange(N)
    H = np.diag(n + 0.5).astype(np.complex128)
    _, x, p = ladder_operators(N)
    sym = {"parity": np.diag((-1.0) ** n).astype(np.complex128)}
    for k in range(min(N, 4)):
        P = np.zeros((N, N), dtype=np.complex128)
        P[k, k] = 1.0
        sym[f"number{k}"] = P
    return ModelInstance("oscillator", H, p, sym, {"N": N, "x": x, "p": p})


# -- the alpha family ---------------------------------------------------------

@dataclass(frozen=True)
class AlphaIntegral:
    g: float
    c_alpha: float
    error: float  # bound on |g^2 - estimate^2| (quadrature + tail remainder)
    cutoff: float
    lower_bound: float  # c_alpha * eps^((alpha-1)/2)


def _weight(alpha):
    return lambda x: (1.0 + x * x) ** (-0.5 * alpha)


def _smooth_tail(alpha: float, X: float) -> float:
    # int_X^inf (1+x^2)^(-alpha/2) dx via the binomial series in 1/x^2 (X >= 2)
    total, k, coef = 0.0, 0, 1.0
    while True:
        term = coef * X ** (1.0 - alpha - 2 * k) / (alpha + 2 * k - 1.0)
        total += term
        if abs(term) < 1e-18 * abs(total) or k > 200:
            return total
        coef *= (-0.5 * alpha - k) / (k + 1)
        k += 1


def _osc_tail(alpha: float, omega: float, X: float) -> tuple[float, float]:
    # int_X^inf cos(omega x) w(x) dx after two integrations by parts; remainder <= |w'(X)|/omega^2
    w = (1.0 + X * X) ** (-0.5 * alpha)
    dw = -alpha * X * (1.0 + X * X) ** (-0.5 * alpha - 1.0)
    value = -math.sin(omega * X) * w / omega - math.cos(omega * X) * dw / omega**2
    return value, abs(dw) / omega**2


def _required_cutoff(alpha: float, eps: float, budget: float) -> float:
    # |w'(X)| / (16 eps^2) <= budget, with |w'(X)| <= alpha X^(-alpha-1)
    return max(2.0, (alpha / (16.0 * eps * eps * budget)) ** (1.0 / (alpha + 1.0)))


def _breakpoints(X: float, eps: float) -> np.ndarray:
    geo = np.geomspace(1e-3, X, max(8, int(8 * math.log10(X / 1e-3))))
    step = math.pi / (8.0 * eps)  # a quarter of the period of sin^2(2 eps x)
    uni = np.arange(0.0, X, step) if X / step < 5e7 else np.zeros(0)
    return np.unique(np.concatenate([[0.0, X], geo, uni]))


def _sin2_integral(alpha: float, eps: float, X: float, tol: float) -> tuple[float, float]:
    w = _weight(alpha)
    f = lambda x: np.sin(2.0 * eps * x) ** 2 * w(x)
    half, err = adaptive_simpson(f, _breakpoints(X, eps), 0.5 * tol)
    return 2.0 * half, 2.0 * err


def _g_squared(alpha: float, eps: float, cutoff: float | None, abs_tol: float):
    budget = 0.5 * abs_tol
    need = _required_cutoff(alpha, eps, budget)
    X = need if cutoff is None else float(cutoff)
    if X < need:
        raise CutoffTooSmallError(X, need)
    finite, qerr = _sin2_integral(alpha, eps, X, budget)
    osc, rem = _osc_tail(alpha, 4.0 * eps, X)
    # both tails: int_{|x|>X} sin^2 w = int_X^inf w - int_X^inf cos(4 eps x) w
    tail = _smooth_tail(alpha, X) - osc
    return finite + tail, qerr + rem, X


C_ALPHA_TOL = 1e-10


@lru_cache(maxsize=64)
def _c_alpha_squared(alpha: float):
    return _g_squared(alpha, 1.0, None, C_ALPHA_TOL)


def oscillator_alpha_integral(alpha: float, eps: float, cutoff: float | None = None,
                              abs_tol: float = 1e-9) -> AlphaIntegral:
    """g(eps, alpha) and c_alpha = g(1, alpha).

    c_alpha is computed once per alpha with absolute tolerance
    ``C_ALPHA_TOL`` on c_alpha^2.

    The integral over [-X, X] uses adaptive Simpson with half the absolute
    tolerance. The tail beyond X is added in closed form: the
    non-oscillating part exactly, the oscillating part through two
    integrations by parts whose remainder (at most |w'(X)| / (16 eps^2)) is
    kept within the other half of the budget. With ``cutoff=None`` the
    smallest admissible X is used.

    Raises
    ------
    CutoffTooSmallError
        If the given cutoff leaves the tail remainder above budget.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    g2, err, X = _g_squared(float(alpha), float(eps), cutoff, float(abs_tol))
    c2, _, _ = _c_alpha_squared(float(alpha))
    g, c = math.sqrt(g2), math.sqrt(c2)
    return AlphaIntegral(g, c, err, X, c * eps ** (0.5 * (alpha - 1.0)))


def oscillator_alpha_exponent(alpha: float, eps_values, rel_tol: float = 1e-7) -> tuple[list[float], float, float]:
    """g(eps, alpha) along ``eps_values`` and the fitted exponent of g against eps.

    Each g^2 is computed to ``rel_tol`` relative accuracy, using
    c_alpha^2 eps^(alpha - 1) <= g^2 as the scale. Returns (g values, slope, r^2).
    """
    c2, _, _ = _c_alpha_squared(float(alpha))
    gs = [oscillator_alpha_integral(alpha, e, abs_tol=rel_tol * c2 * e ** (alpha - 1.0)).g
          for e in eps_values]
    slope, r2 = exponent_fit(eps_values, gs)
    return gs, slope, r2


def oscillator_norm_ratio(alpha: float, cutoff: float, abs_tol: float = 1e-6) -> tuple[float, float, float]:
    """Truncated c_alpha(X), ||psi_alpha||(X) and their ratio, integrals over [-X, X]."""
    w = _weight(alpha)
    bp = _breakpoints(cutoff, 1.0)
    num, _ = adaptive_simpson(lambda x: np.sin(2.0 * x) ** 2 * w(x), bp, 0.5 * abs_tol)
    den, _ = adaptive_simpson(w, np.geomspace(1e-3, cutoff, 200).tolist() + [0.0], 0.5 * abs_tol)
    c, nrm = math.sqrt(2 * num), math.sqrt(2 * den)
    return c, nrm, c / nrm


def oscillator_shift_check(N: int = 60, eps: float = 0.2) -> dict:
    """Compare the lowest N//3 eigenvalues of H_N + eps p_N with n + 1/2 - eps^2/2."""
    model = truncated_oscillator(N)
    w, _ = hermitian_eig(model.H + eps * model.V)
    m = N // 3
    expected = np.arange(m) + 0.5 - 0.5 * eps**2
    dev = np.abs(w[:m] - expected)
    return {"N": N, "eps": eps, "modes": m, "max_deviation": float(dev.max()),
            "eigenvalues": w[:m].tolist()}


def parity_check(N: int) -> float:
    """||Pi - i exp(-i pi H_N)||_F for the truncated oscillator."""
    model = truncated_oscillator(N)
    return float(np.linalg.norm(model.symmetries["parity"] - 1j * unitary_exp(model.H, math.pi)))


SCENARIOS = ("degenerate-diag", "oscillator", "oscillator-alpha")
