"""The exact Laplace transform ``L(t, s)`` of the mass distribution.

``L(t, s) = ell(t, zeta(t, s))``: follow the characteristic that sits at
``s`` at time ``t`` back to its starting point ``zeta(t, s)`` and read off
``ell`` there.  Mass conservation ``L(t, 0) = 1`` is the identity
``ell(t, T^{-1}(t)) = 1``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import characteristics as ch
from .errors import DomainError
from .measure import MeasureSpec

__all__ = [
    "LaplaceEvaluator",
    "L",
    "pde_residual",
    "dL_ds_at_zero",
    "moment_asymptote",
]


@dataclass
class LaplaceEvaluator:
    """Evaluates the exact solution for one initial measure and one ``k``.

    ``T^{-1}(t)`` is cached per ``t`` because every ``zeta(t, .)`` bracket
    starts there.  The cache is guarded by a lock, so one evaluator may be
    shared between threads.
    """

    measure: MeasureSpec
    k: float
    root_tol: float = 1e-12
    residual_step: float | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False,
                                  compare=False)

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError(f"k must be positive, got {self.k!r}")
        if not self.root_tol > 0:
            raise DomainError("root_tol must be positive")
        if self.residual_step is not None and not self.residual_step > 0:
            raise DomainError("residual_step must be positive")

    def t_inverse(self, t: float) -> float:
        t = float(t)
        with self._lock:
            hit = self._cache.get(t)
        if hit is None:
            hit = ch.T_inverse(t, self.k, self.measure)
            with self._lock:
                self._cache[t] = hit
        return hit

    def zeta(self, t: float, s: float) -> float:
        return ch.zeta(t, s, self.k, self.measure, s_min=self.t_inverse(t))

    def __call__(self, t, s):
        """``L(t, s)``; ``s`` may be an array."""
        if np.ndim(s) == 0:
            return self._value(float(t), float(s))
        return np.array([self._value(float(t), float(x)) for x in np.asarray(s).ravel()]
                        ).reshape(np.shape(s))

    def _value(self, t, s):
        if not t > 0:
            raise DomainError(f"time must be positive, got {t!r}")
        if s < 0:
            raise DomainError(f"s must be non-negative, got {s!r}")
        if s == 0:
            sig = self.t_inverse(t)
        else:
            sig = self.zeta(t, s)
        return ch._ell(t, self.k, self.measure.transform(sig))

    def dL_ds(self, t: float, s: float) -> float:
        """``d_s L(t, s)`` from the chain rule through ``zeta``."""
        sig = self.t_inverse(t) if s == 0 else self.zeta(t, s)
        tr = self.measure.transform(sig)
        return ch._dell_ds(t, self.k, tr) / ch._dsigma_ds(t, self.k, tr)

    def dL_ds_at_zero(self, t: float) -> float:
        """``d_s L(t, 0) = L1(s0) / (1 + t L1(s0))`` with ``s0 = T^{-1}(t)``.

        Equals minus the first moment of ``nu(t)``; finite for every
        ``t > 0`` even when the initial first moment is infinite.
        """
        if not t > 0:
            raise DomainError(f"time must be positive, got {t!r}")
        L1 = self.measure.transform(self.t_inverse(t))[2]
        return L1 / (1.0 + t * L1)

    def first_moment(self, t: float) -> float:
        return -self.dL_ds_at_zero(t)

    def pde_residual(self, t: float, s: float, h: float | None = None) -> float:
        """Central-difference residual of the Laplace-space equation.

        Returns ``|d_t L - (1 + k - L) d_s L - k (1 - L) / s|`` with both
        derivatives replaced by central differences of step ``h``; this is
        ``O(h**2)`` for an exact solution.
        """
        if h is None:
            h = self.residual_step or 1e-4 * max(1.0, s, t)
        if not (t > h and s > h):
            raise DomainError("need t > h and s > h")
        k = self.k
        Lc = self._value(t, s)
        dLdt = (self._value(t + h, s) - self._value(t - h, s)) / (2.0 * h)
        dLds = (self._value(t, s + h) - self._value(t, s - h)) / (2.0 * h)
        return abs(dLdt - (1.0 + k - Lc) * dLds - k * (1.0 - Lc) / s)


def L(ev: LaplaceEvaluator, t, s):
    """``L(t, s)`` for the evaluator ``ev``."""
    return ev(t, s)


def pde_residual(ev: LaplaceEvaluator, t: float, s: float, h: float | None = None) -> float:
    return ev.pde_residual(t, s, h)


def dL_ds_at_zero(ev: LaplaceEvaluator, t: float) -> float:
    return ev.dL_ds_at_zero(t)


def moment_asymptote(k: float) -> float:
    """``e^{1/k} - 1``: the limit of ``t`` times the first moment of ``nu(t)``."""
    if not k > 0:
        raise DomainError("k must be positive")
    return math.expm1(1.0 / k)
