"""Vectorized adaptive Simpson quadrature over a set of panels."""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["adaptive_simpson"]


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], breakpoints, abs_tol: float,
                     max_depth: int = 40, rel_floor: float = 1e-12) -> tuple[float, float]:
    """Integrate ``f`` over [breakpoints[0], breakpoints[-1]].

    Every panel between consecutive breakpoints is refined independently
    with a tolerance proportional to its width; all panels of one level are
    evaluated in a single vectorized call to ``f``. Returns the Richardson
    corrected integral and the summed error estimate. A panel is also
    accepted once its error estimate falls below ``rel_floor`` times its
    own value, which keeps roundoff from driving the refinement.
    """
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    a, b = bp[:-1], bp[1:]
    length = bp[-1] - bp[0]
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = abs_tol * (b - a) / length
    total, err = 0.0, 0.0
    for depth in range(max_depth + 1):
        if a.size == 0:
            break
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        floor = rel_floor * np.abs(left + right)
        done = np.abs(delta) <= 15.0 * np.maximum(tol, floor)
        if depth == max_depth:
            done[:] = True
        total += float(np.sum((left + right + delta / 15.0)[done]))
        err += float(np.sum(np.abs(delta[done]) / 15.0))
        keep = ~done
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb, flm, frm = fa[keep], fm[keep], fb[keep], flm[keep], frm[keep]
        left, right, tol = left[keep], right[keep], tol[keep]
        lm, rm = lm[keep], rm[keep]
        a = np.concatenate([a, m])
        b_new = np.concatenate([m, b])
        m = np.concatenate([lm, rm])
        fa, fb = np.concatenate([fa, fm]), np.concatenate([fm, fb])
        fm = np.concatenate([flm, frm])
        whole = np.concatenate([left, right])
        tol = np.concatenate([tol, tol]) * 0.5
        b = b_new
    return total, err
