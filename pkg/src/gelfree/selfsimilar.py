"""Self-similar large-time profile.

For large times ``L(t, t s)`` converges to

    L_star(s) = 1 + s - k W((s / k) exp((1 + s) / k)),

the Laplace transform of a probability measure ``nu_star`` whose distribution
function ``M_star`` is the limit of ``M(t, x / t)``.  ``W`` is the principal
Lambert function, evaluated here from scratch by Halley iteration.  An
equivalent route goes through the inverse of ``h(z) = (1 + s) z + k z ln z``
on ``(exp(-1/k), 1)``: ``L_star(s) = -k ln h^{-1}(s)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._roots import newton_bisect
from .errors import DomainError, InversionWarning

__all__ = [
    "SelfSimilarProfile",
    "lambert_w",
    "lambert_w_log",
    "L_star",
    "L_star_h_route",
    "h_eval",
    "h_inverse",
    "selfsim_error",
    "stehfest_coefficients",
    "gaver_stehfest",
    "M_star",
    "InversionReport",
    "invert_profile",
]

_MAX_HALLEY = 50
_EPS = 2.0 ** -52


@dataclass(frozen=True)
class SelfSimilarProfile:
    k: float
    w_tol: float = 1e-13
    inversion_order: int = 12

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError("k must be positive")
        if self.inversion_order not in range(8, 20, 2):
            raise DomainError("inversion_order must be an even integer in [8, 18]")


# -- Lambert W ----------------------------------------------------------------

def lambert_w(z: float) -> float:
    """Principal branch of the Lambert function for ``z >= 0``.

    Starts from a short series near zero, from ``log1p(z)`` on ``(0.25, e]``
    and from ``ln z - ln ln z`` beyond ``e``, then runs Halley iterations.
    """
    z = float(z)
    if z < 0 or math.isnan(z):
        raise DomainError(f"lambert_w needs z >= 0, got {z!r}")
    if z == 0:
        return 0.0
    if math.isinf(z):
        return math.inf
    if z < 0.25:
        w = z * (1.0 - z * (1.0 - 1.5 * z))
    elif z <= math.e:
        w = math.log1p(z)
    else:
        lz = math.log(z)
        w = lz - math.log(lz)
    for _ in range(_MAX_HALLEY):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4.0 * _EPS * max(1.0, abs(w)) or f == 0:
            break
    return w


def lambert_w_log(log_z: float) -> float:
    """``W(exp(log_z))`` for arguments too large to exponentiate.

    Solves ``w + ln w = log_z`` by Newton iteration.
    """
    if log_z < 1.0:
        return lambert_w(math.exp(log_z))
    w = log_z - math.log(log_z)
    for _ in range(_MAX_HALLEY):
        g = w + math.log(w) - log_z
        dw = g / (1.0 + 1.0 / w)
        w -= dw
        if abs(dw) <= 4.0 * _EPS * w:
            break
    return w


# -- profile --------------------------------------------------------------

def _k_of(p):
    return p.k if isinstance(p, SelfSimilarProfile) else float(p)


def _L_star_scalar(s, k):
    if s < 0:
        raise DomainError(f"s must be non-negative, got {s!r}")
    if s == 0:
        return 1.0
    log_z = math.log(s / k) + (1.0 + s) / k
    w = lambert_w(math.exp(log_z)) if log_z < 700.0 else lambert_w_log(log_z)
    # W = ln z - ln W turns 1 + s - k W into k ln(k W / s), free of cancellation
    return k * math.log(k * w / s)


def L_star(p, s):
    """Self-similar transform ``L_star(s)``; ``p`` is a profile or ``k``."""
    k = _k_of(p)
    if np.ndim(s) == 0:
        return _L_star_scalar(float(s), k)
    return np.array([_L_star_scalar(float(x), k) for x in np.ravel(s)]).reshape(np.shape(s))


def h_eval(z: float, s: float, k: float) -> float:
    """``h(z) = (1 + s) z + k z ln z`` on ``[exp(-1/k), 1]``."""
    lo = math.exp(-1.0 / k)
    if not lo <= z <= 1.0:
        raise DomainError(f"z={z!r} outside [exp(-1/k), 1]")
    if z == 1.0:
        return 1.0 + s
    if z == lo:
        return s * lo
    return (1.0 + s) * z + k * z * math.log(z)


def h_inverse(y: float, s: float, k: float) -> float:
    """Inverse of :func:`h_eval`, for ``y`` in ``[s exp(-1/k), s + 1]``."""
    lo = math.exp(-1.0 / k)
    ylo, yhi = s * lo, 1.0 + s
    if not ylo <= y <= yhi:
        raise DomainError(f"y={y!r} outside [{ylo!r}, {yhi!r}]")
    if y == ylo:
        return lo
    if y == yhi:
        return 1.0

    def f(z):
        return (1.0 + s) * z + k * z * math.log(z) - y

    def df(z):
        return 1.0 + s + k * (math.log(z) + 1.0)

    return newton_bisect(f, df, lo, 1.0, ylo - y, yhi - y)


def L_star_h_route(p, s: float) -> float:
    """``L_star(s)`` computed as ``-k ln h^{-1}(s)`` instead of via ``W``."""
    k = _k_of(p)
    if s == 0:
        return 1.0
    return -k * math.log(h_inverse(s, s, k))


def selfsim_error(ev, p, t: float, s_grid) -> float:
    """``max_s |L(t, t s) - L_star(s)|`` over ``s_grid``."""
    k = _k_of(p)
    if abs(ev.k - k) > 1e-15 * k:
        raise DomainError("evaluator and profile use different k")
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid < 0):
        raise DomainError("grid must be non-negative")
    return max(abs(ev(t, t * s) - _L_star_scalar(s, k)) for s in s_grid)


# -- Gaver-Stehfest inversion ---------------------------------------------------

@lru_cache(maxsize=None)
def stehfest_coefficients(n: int) -> tuple:
    """Stehfest weights ``V_1..V_n`` (``n`` even), computed in exact arithmetic."""
    if n % 2 or n < 2:
        raise DomainError("Stehfest order must be even and positive")
    half = n // 2
    fact = math.factorial
    out = []
    for i in range(1, n + 1):
        acc = Fraction(0)
        for j in range((i + 1) // 2, min(i, half) + 1):
            acc += Fraction(j**half * fact(2 * j),
                            fact(half - j) * fact(j) * fact(j - 1) * fact(i - j) * fact(2 * j - i))
        out.append(float((-1) ** (i + half) * acc))
    return tuple(out)


def gaver_stehfest(F, x: float, order: int = 12) -> float:
    """Invert the Laplace transform ``F`` at ``x > 0`` along the real axis."""
    if not x > 0:
        raise DomainError("x must be positive")
    a = math.log(2.0) / x
    V = stehfest_coefficients(order)
    return a * math.fsum(v * F(i * a) for i, v in enumerate(V, start=1))


def M_star(p: SelfSimilarProfile, x, order: int | None = None):
    """Distribution function of ``nu_star`` by Gaver-Stehfest inversion of ``L_star(s)/s``."""
    order = p.inversion_order if order is None else order
    k = p.k

    def F(s):
        return _L_star_scalar(s, k) / s

    if np.ndim(x) == 0:
        return gaver_stehfest(F, float(x), order)
    return np.array([gaver_stehfest(F, float(v), order) for v in np.ravel(x)]).reshape(np.shape(x))


@dataclass
class InversionReport:
    """``M_star`` on a grid plus stability diagnostics."""

    x: np.ndarray
    values: np.ndarray
    order: int
    check_orders: tuple
    order_gap: float
    monotone_gap: float
    tol: float
    warnings: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return not self.warnings


def invert_profile(p: SelfSimilarProfile, x_grid, check_orders=(10, 14),
                   monotone_tol: float = 5e-4, agree_tol: float = 1e-3) -> InversionReport:
    """Invert on ``x_grid`` and compare two other orders.

    A decrease larger than ``monotone_tol`` between neighbouring grid points,
    or disagreement above ``agree_tol`` between the two ``check_orders``, is
    recorded in the report and raised as an :class:`InversionWarning`.
    """
    x = np.sort(np.asarray(x_grid, dtype=float))
    values = M_star(p, x)
    lo, hi = (M_star(p, x, o) for o in check_orders)
    gap = float(np.max(np.abs(lo - hi))) if x.size else 0.0
    drop = float(max(0.0, -np.min(np.diff(values)))) if x.size > 1 else 0.0
    rep = InversionReport(x, values, p.inversion_order, tuple(check_orders), gap, drop,
                          monotone_tol)
    if drop > monotone_tol:
        rep.warnings.append(f"M_star decreases by {drop:.3g} on the grid")
    if gap > agree_tol:
        rep.warnings.append(f"orders {check_orders} disagree by {gap:.3g}")
    for msg in rep.warnings:
        warnings.warn(msg, InversionWarning, stacklevel=2)
    return rep
