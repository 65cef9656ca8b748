"""Safeguarded Newton iteration for monotone scalar equations."""
from __future__ import annotations

import math

from .errors import ConvergenceError

MAX_ITER = 200


def expand_bracket(f, lo, hi, max_doublings=MAX_ITER):
    """Grow ``[lo, hi]`` geometrically until ``f(lo) <= 0 <= f(hi)``.

    ``f`` must be increasing.  ``lo`` is halved and ``hi`` doubled.
    """
    flo, fhi = f(lo), f(hi)
    n = 0
    while flo > 0:
        hi, fhi = lo, flo
        lo *= 0.5
        flo = f(lo)
        n += 1
        if n > max_doublings:
            raise ConvergenceError("could not bracket root from below")
    while fhi < 0:
        lo, flo = hi, fhi
        hi *= 2.0
        fhi = f(hi)
        n += 1
        if n > max_doublings or not math.isfinite(hi):
            raise ConvergenceError("could not bracket root from above")
    return lo, hi, flo, fhi


def newton_bisect(f, df, lo, hi, flo=None, fhi=None, ftol=0.0, rtol=2e-15,
                  max_iter=MAX_ITER):
    """Root of an increasing function on the bracket ``[lo, hi]``.

    Newton steps are used while they stay inside the current bracket; any
    escaping step is replaced by bisection.  Iteration stops when the residual
    drops to ``ftol`` or the bracket/step shrinks below ``rtol`` relative.
    """
    if flo is None:
        flo = f(lo)
    if fhi is None:
        fhi = f(hi)
    if flo > 0 or fhi < 0:
        raise ConvergenceError(f"invalid bracket [{lo}, {hi}] with values {flo}, {fhi}")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    x = lo - flo * (hi - lo) / (fhi - flo)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for it in range(max_iter):
        fx = f(x)
        if fx == 0 or abs(fx) <= ftol:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        d = df(x)
        # Newton can stall on rounding noise; plain bisection then finishes
        step_ok = it < 60 and d > 0 and math.isfinite(d)
        if step_ok:
            xn = x - fx / d
            step_ok = lo < xn < hi
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= rtol * abs(x) or hi - lo <= rtol * abs(x):
            return xn if lo <= xn <= hi else x
        x = xn
    raise ConvergenceError(f"no convergence within {max_iter} iterations (bracket [{lo}, {hi}])")
