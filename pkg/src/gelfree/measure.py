"""Initial probability measures and their Laplace transforms.

A :class:`MeasureSpec` describes the initial mass distribution ``nu_in`` on
``(0, inf)``.  Four families are supported:

* ``atomic`` -- finitely many atoms ``sum_i w_i delta_{x_i}``,
* ``exponential`` -- density ``rate * exp(-rate * x)``,
* ``power-tail`` -- density ``(a - 1) c**(a - 1) x**(-a)`` on ``(c, inf)``;
  the default ``a = 2, c = 1`` has an infinite first moment,
* ``generic`` -- a user supplied density integrated by adaptive quadrature.

For every family :func:`eval_transform` returns ``L0(s)``, ``L0'(s)``,
``L1(s) = (L0(s) - 1)/s`` and ``L1'(s)``.  ``L1`` and ``L1'`` are never
formed by subtracting ``L0`` from one: each family has an expression free of
cancellation, so they stay accurate as ``s -> 0``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, MeasureError

__all__ = [
    "MeasureSpec",
    "TransformValue",
    "MonotonicityReport",
    "total_mass",
    "eval_transform",
    "check_complete_monotone",
    "parse_measure",
]

FAMILIES = ("atomic", "exponential", "power-tail", "generic")
MASS_TOL = 1e-12
SMALL_S = 1e-4
# exp(-u) < 1e-16 for u beyond this
_TRUNCATE_U = 36.85

# coefficients of (1 - (1 + u) e^{-u}) / u**2 = sum_n (-1)^n (n-1)/n! u^(n-2)
_G_SERIES = np.array([(-1) ** n * (n - 1) / math.factorial(n) for n in range(2, 22)])
_G_SERIES_REV = [float(c) for c in _G_SERIES[::-1]]


def _phi(u):
    """-expm1(-u)/u, which tends to 1 as u -> 0."""
    u = np.asarray(u, dtype=float)
    return -np.expm1(-u) / u


def _g(u):
    """(1 - (1 + u) e^{-u}) / u**2 evaluated without cancellation."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 0.5
    if np.any(small):
        out[small] = np.polynomial.polynomial.polyval(u[small], _G_SERIES)
    big = ~small
    if np.any(big):
        ub = u[big]
        out[big] = (-np.expm1(-ub) - ub * np.exp(-ub)) / ub**2
    return out


def _g_scalar(u: float) -> float:
    if u < 0.5:
        acc = 0.0
        for c in _G_SERIES_REV:
            acc = acc * u + c
        return acc
    return (-math.expm1(-u) - u * math.exp(-u)) / (u * u)


@dataclass(frozen=True)
class TransformValue:
    """Laplace transform data of ``nu_in`` at one point ``s > 0``."""

    s: float
    L0: float
    L0_prime: float
    L1: float
    L1_prime: float


@dataclass(frozen=True)
class MeasureSpec:
    """An initial probability measure on ``(0, inf)``.

    Use the class methods (:meth:`atomic`, :meth:`monodisperse`,
    :meth:`exponential`, :meth:`power_tail`, :meth:`generic`) rather than the
    raw constructor.  Instances are immutable and validated on creation.
    """

    family: str
    atoms: tuple = ()
    rate: float = 1.0
    exponent: float = 2.0
    cut: float = 1.0
    density: Callable[[float], float] | None = field(default=None, compare=False)
    support: tuple = (0.0, math.inf)
    sampler: Callable | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise MeasureError(f"unknown measure family {self.family!r}")
        if self.family == "atomic":
            if not self.atoms:
                raise MeasureError("atomic measure needs at least one atom")
            for x, w in self.atoms:
                if not (x > 0 and math.isfinite(x)) or not (w > 0 and math.isfinite(w)):
                    raise MeasureError(f"atom ({x}, {w}) must have positive finite mass and weight")
            xs = np.array([a[0] for a in self.atoms], dtype=float)
            ws = np.array([a[1] for a in self.atoms], dtype=float)
            object.__setattr__(self, "_xs", xs)
            object.__setattr__(self, "_ws", ws)
        elif self.family == "exponential":
            if not (self.rate > 0 and math.isfinite(self.rate)):
                raise MeasureError("exponential rate must be positive")
        elif self.family == "power-tail":
            if not self.exponent > 1:
                raise MeasureError("power-tail exponent must exceed 1")
            if not self.cut > 0:
                raise MeasureError("power-tail cut must be positive")
            if float(self.exponent).is_integer():
                object.__setattr__(self, "_n", int(self.exponent))
            else:
                a, c = self.exponent, self.cut
                object.__setattr__(
                    self, "density", lambda x: (a - 1) * c ** (a - 1) * x ** (-a)
                )
                object.__setattr__(self, "support", (c, math.inf))
                object.__setattr__(self, "_n", None)
        else:
            if self.density is None:
                raise MeasureError("generic family needs a density callable")
            lo, hi = self.support
            if not (0 <= lo < hi):
                raise MeasureError(f"invalid support {self.support}")
        mass = total_mass(self)
        if abs(mass - 1.0) > MASS_TOL:
            raise MeasureError(f"total mass {mass!r} differs from 1 by more than {MASS_TOL}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def atomic(cls, atoms: Sequence[tuple[float, float]], normalize: bool = False) -> "MeasureSpec":
        atoms = tuple((float(x), float(w)) for x, w in atoms)
        if normalize:
            tot = math.fsum(w for _, w in atoms)
            atoms = tuple((x, w / tot) for x, w in atoms)
        return cls("atomic", atoms=atoms)

    @classmethod
    def monodisperse(cls, x: float = 1.0) -> "MeasureSpec":
        return cls("atomic", atoms=((float(x), 1.0),), label="mono")

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "MeasureSpec":
        return cls("exponential", rate=float(rate))

    @classmethod
    def power_tail(cls, exponent: float = 2.0, cut: float = 1.0) -> "MeasureSpec":
        return cls("power-tail", exponent=float(exponent), cut=float(cut))

    @classmethod
    def generic(cls, density, support=(0.0, math.inf), sampler=None, label="") -> "MeasureSpec":
        return cls("generic", density=density, support=tuple(map(float, support)),
                   sampler=sampler, label=label)

    # -- properties -------------------------------------------------------

    @property
    def first_moment(self) -> float:
        """Mean of ``nu_in``; ``inf`` when it does not exist."""
        if self.family == "atomic":
            return float(np.dot(self._xs, self._ws))
        if self.family == "exponential":
            return 1.0 / self.rate
        if self.family == "power-tail":
            a = self.exponent
            return math.inf if a <= 2 else (a - 1) / (a - 2) * self.cut
        return _quad_panels(lambda x: x * self.density(x), *self.support)

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.family == "atomic":
            return "atomic:" + ",".join(f"{x!r}@{w!r}" for x, w in self.atoms)
        if self.family == "exponential":
            return f"exp:{self.rate!r}"
        if self.family == "power-tail":
            return f"powertail:{self.exponent!r},{self.cut!r}"
        return "generic"

    # -- transforms -------------------------------------------------------

    def transform(self, s: float) -> tuple[float, float, float, float]:
        """Return ``(L0, L0', L1, L1')`` at ``s > 0`` as a plain tuple."""
        if not s > 0:
            raise DomainError(f"Laplace variable must be positive, got {s!r}")
        fam = self.family
        if fam == "atomic":
            return self._transform_atomic(s)
        if fam == "exponential":
            r = self.rate + s
            return self.rate / r, -self.rate / (r * r), -1.0 / r, 1.0 / (r * r)
        if fam == "power-tail" and self._n is not None:
            return self._transform_power_tail(s)
        return self._transform_quadrature(s)

    def _transform_atomic(self, s):
        xs, ws = self._xs, self._ws
        if xs.size == 1:
            x, w = xs[0], ws[0]
            u = s * x
            e = math.exp(-u)
            x, w = float(x), float(w)
            return (w * e, -w * x * e, w * x * math.expm1(-u) / u, w * x * x * _g_scalar(u))
        u = s * xs
        e = np.exp(-u)
        L0 = float(np.dot(ws, e))
        L0p = -float(np.dot(ws * xs, e))
        L1 = -float(np.dot(ws * xs, _phi(u)))
        L1p = float(np.dot(ws * xs * xs, _g(u)))
        return L0, L0p, L1, L1p

    def _transform_power_tail(self, s):
        n, c = self._n, self.cut
        u = s * c
        L0 = (n - 1) * special.expn(n, u)
        L0p = -c * (n - 1) * special.expn(n - 1, u)
        L1 = c * (math.expm1(-u) / u - special.expn(n - 1, u))
        L1p = c * c * (_g_scalar(u) + special.expn(n - 2, u))
        return float(L0), float(L0p), float(L1), float(L1p)

    def _transform_quadrature(self, s):
        f = self.density
        lo, hi = self.support
        upper = min(hi, lo + _TRUNCATE_U / s)
        L0 = _quad_panels(lambda x: math.exp(-s * x) * f(x), lo, upper)
        L0p = _quad_panels(lambda x: -x * math.exp(-s * x) * f(x), lo, upper)
        # bounded integrands (by f/s and f/s**2), so no truncation here
        L1 = _quad_panels(lambda x: -x * _phi_scalar(s * x) * f(x), lo, hi)
        L1p = _quad_panels(lambda x: x * x * _g_scalar(s * x) * f(x), lo, hi)
        return L0, L0p, L1, L1p

    # -- sampling ---------------------------------------------------------

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` masses distributed according to ``nu_in``.

        Atomic measures use proportional allocation: atom ``i`` receives
        ``floor(n w_i)`` particles and the remaining slots go to distinct
        atoms drawn with probability proportional to the fractional parts.
        """
        if n < 1:
            raise DomainError("need at least one particle")
        fam = self.family
        if fam == "atomic":
            expected = n * self._ws
            counts = np.floor(expected).astype(np.int64)
            rest = n - int(counts.sum())
            if rest > 0:
                frac = expected - counts
                extra = rng.choice(len(frac), size=rest, replace=False, p=frac / frac.sum())
                counts[extra] += 1
            return np.repeat(self._xs, counts)
        if fam == "exponential":
            return rng.exponential(1.0 / self.rate, size=n)
        if fam == "power-tail":
            u = 1.0 - rng.random(n)  # in (0, 1]
            return self.cut * u ** (-1.0 / (self.exponent - 1.0))
        if self.sampler is None:
            raise MeasureError("generic density has no sampler; pass sampler=")
        out = np.asarray(self.sampler(n, rng), dtype=float)
        if out.shape != (n,) or not np.all(out > 0):
            raise MeasureError("sampler must return n positive masses")
        return out


def _phi_scalar(u: float) -> float:
    return -math.expm1(-u) / u if u > 0 else 1.0


def _quad(func, lo, hi):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
        except integrate.IntegrationWarning as exc:
            raise MeasureError(f"quadrature failed on ({lo}, {hi}): {exc}") from None
    if not math.isfinite(val):
        raise MeasureError(f"non-finite quadrature result on ({lo}, {hi})")
    return val, err


def _quad_panels(func, lo, hi):
    # geometric panels [lo, lo+1, lo+2, lo+4, ...] so that long truncated
    # ranges do not hide the bulk of the density near lo
    edges = [lo]
    width = 1.0
    while edges[-1] < hi and width < 2.0**40:
        edges.append(min(hi, lo + width))
        width *= 2.0
    total = math.fsum(_quad(func, a, b)[0] for a, b in zip(edges[:-1], edges[1:]))
    if edges[-1] < hi:
        total += _quad(func, edges[-1], hi)[0]
    return total


def total_mass(m: MeasureSpec) -> float:
    """Total mass of ``m``: exact for closed-form families, quadrature otherwise."""
    if m.family == "atomic":
        return math.fsum(w for _, w in m.atoms)
    if m.family == "exponential":
        return 1.0
    if m.family == "power-tail" and getattr(m, "_n", None) is not None:
        return 1.0
    return _quad_panels(m.density, *m.support)


def eval_transform(m: MeasureSpec, s: float) -> TransformValue:
    """Evaluate ``L0, L0', L1, L1'`` of ``m`` at ``s > 0``."""
    return TransformValue(float(s), *m.transform(float(s)))


@dataclass
class MonotonicityReport:
    """Outcome of :func:`check_complete_monotone`.

    ``violations`` holds ``(s, order, signed_difference)`` triples whose
    signed difference fell below ``-tol``.
    """

    max_order: int
    h: float
    tol: float
    n_points: int
    violations: list = field(default_factory=list)
    worst: float = math.inf

    @property
    def passed(self) -> bool:
        return not self.violations


def check_complete_monotone(f, s_grid, max_order: int = 8, h: float = 1e-2,
                            tol: float = 1e-9) -> MonotonicityReport:
    """Check ``(-1)^n Delta_h^n f(s) >= -tol`` for ``n <= max_order``.

    ``Delta_h`` is the forward difference with step ``h``.  A completely
    monotone function passes for every grid and step; the report lists any
    violations instead of raising.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if max_order > 10 or max_order < 0:
        raise DomainError("max_order must lie in [0, 10]")
    if not h > 0:
        raise DomainError("step must be positive")
    if s_grid.size and s_grid.min() <= h * max_order:
        raise DomainError("grid must lie above h * max_order")
    report = MonotonicityReport(max_order, h, tol, int(s_grid.size))
    offsets = h * np.arange(max_order + 1)
    for s in s_grid:
        vals = np.array([f(s + d) for d in offsets], dtype=float)
        for n in range(max_order + 1):
            signed = (-1) ** n * vals[0]
            report.worst = min(report.worst, signed)
            if signed < -tol:
                report.violations.append((float(s), n, float(signed)))
            vals = np.diff(vals)
    return report


def parse_measure(text: str) -> MeasureSpec:
    """Build a measure from a compact string.

    Accepted forms: ``mono`` or ``mono:x``, ``atomic:x1@w1,x2@w2``,
    ``exp:rate``, ``powertail`` or ``powertail:exponent[,cut]``.
    """
    text = text.strip()
    name, _, args = text.partition(":")
    name = name.lower()
    try:
        if name in ("mono", "monodisperse"):
            return MeasureSpec.monodisperse(float(args) if args else 1.0)
        if name == "atomic":
            atoms = []
            for item in args.split(","):
                x, _, w = item.partition("@")
                atoms.append((float(x), float(w)))
            return MeasureSpec.atomic(atoms)
        if name in ("exp", "exponential"):
            return MeasureSpec.exponential(float(args) if args else 1.0)
        if name in ("powertail", "power-tail"):
            parts = [float(p) for p in args.split(",")] if args else []
            return MeasureSpec.power_tail(*parts)
    except ValueError as exc:
        if isinstance(exc, MeasureError):
            raise
        raise MeasureError(f"cannot parse measure {text!r}: {exc}") from None
    raise MeasureError(f"unknown measure {text!r}")
