"""Characteristic curves of the Laplace-space equation.

Along a characteristic started at ``s > 0`` the pair ``(Sigma, ell)`` solves

    dSigma/dt = ell - 1 - k,     dell/dt = k (1 - ell) / Sigma,

with ``(Sigma, ell)(0) = (s, L0(s))``.  ``Sigma`` reaches zero at the finite
hitting time ``T(s)`` where ``ell`` reaches one.  The system integrates in
closed form; this module evaluates those closed forms, inverts ``T`` and
``Sigma(t, .)`` by bracketed Newton iteration, and provides a fixed-step RK4
integrator of the raw ODE system as an independent oracle.

All closed forms are written in the cancellation-free variables
``a = t L1(s)`` and ``log1p(a)``, e.g. ``T(s) = expm1(s L1(s) / k) / L1(s)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import expand_bracket, newton_bisect
from .errors import DomainError, OracleInconsistency, PastSingularityError
from .measure import MeasureSpec

__all__ = [
    "CharacteristicPath",
    "ell_closed",
    "sigma_closed",
    "time_to_axis",
    "time_to_axis_prime",
    "integrate_characteristics_oracle",
    "conserved_quantity",
    "T_inverse",
    "zeta",
    "dsigma_ds",
    "dell_ds",
]

# closed forms snap to the terminal values this close to T(s)
SNAP_TOL = 1e-10


def _check_k(k):
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"fragmentation constant must be positive, got {k!r}")


def _log1p_minus(a: float) -> float:
    """log1p(a) - a without cancellation for small |a|."""
    if abs(a) < 0.1:
        # -a^2/2 + a^3/3 - ... ; 14 terms reach double precision at |a| = 0.1
        acc = 0.0
        for n in range(16, 1, -1):
            acc = acc * a + ((-1) ** (n + 1)) / n
        return acc * a * a
    return math.log1p(a) - a


# -- raw closed forms on a precomputed transform tuple ----------------------

def _T(s, k, tr):
    L1 = tr[2]
    return math.expm1(s * L1 / k) / L1


def _T_prime(s, k, tr):
    L0, L0p, L1, L1p = tr
    T = math.expm1(s * L1 / k) / L1
    # d(s L1)/ds = L0'
    return (L0p * math.exp(s * L1 / k) - k * L1p * T) / (k * L1)


def _ell(t, k, tr):
    L0, _, L1, _ = tr
    return L0 - k * math.log1p(t * L1)


def _sigma(t, s, k, tr):
    L1 = tr[2]
    a = t * L1
    return (1.0 + a) * (s - k * math.log1p(a) / L1)


def _dsigma_ds(t, k, tr):
    _, L0p, L1, L1p = tr
    return 1.0 + t * L0p + k * L1p / (L1 * L1) * _log1p_minus(t * L1)


def _dell_ds(t, k, tr):
    _, L0p, L1, L1p = tr
    return L0p - k * t * L1p / (1.0 + t * L1)


def _near_axis(t, T):
    """Classify ``t`` against ``T``: -1 before, 0 at (within SNAP_TOL), 1 past."""
    tol = SNAP_TOL * max(1.0, T)
    if t > T + tol:
        return 1
    if t >= T - tol:
        return 0
    return -1


# -- public closed forms ------------------------------------------------------

def time_to_axis(s: float, k: float, m: MeasureSpec) -> float:
    """Hitting time ``T(s)`` at which ``Sigma(., s)`` vanishes."""
    _check_k(k)
    return _T(s, k, m.transform(s))


def time_to_axis_prime(s: float, k: float, m: MeasureSpec) -> float:
    """Derivative ``T'(s) > 0``, from differentiating the defining identity."""
    _check_k(k)
    return _T_prime(s, k, m.transform(s))


def _closed(t, s, k, m, kind):
    _check_k(k)
    tr = m.transform(s)
    T = _T(s, k, tr)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("time must be non-negative")
    tol = SNAP_TOL * max(1.0, T)
    if np.any(t_arr > T + tol):
        raise PastSingularityError(f"t={float(np.max(t_arr))!r} is past T(s)={float(T)!r}")
    L0, _, L1, _ = tr
    a = t_arr * L1
    lg = np.log1p(a)
    if kind == "ell":
        out = L0 - k * lg
        limit = 1.0
    else:
        out = (1.0 + a) * (s - k * lg / L1)
        limit = 0.0
    out = np.where(t_arr >= T - tol, limit, out)
    return float(out) if out.ndim == 0 else out


def ell_closed(t, s: float, k: float, m: MeasureSpec):
    """``ell(t, s) = L0(s) - k log(1 + t L1(s))`` for ``0 <= t <= T(s)``.

    ``t`` may be an array.  Within ``SNAP_TOL`` of ``T(s)`` the terminal
    value 1 is returned.
    """
    return _closed(t, s, k, m, "ell")


def sigma_closed(t, s: float, k: float, m: MeasureSpec):
    """``Sigma(t, s)`` for ``0 <= t <= T(s)``; zero at ``t = T(s)``.

    ``t`` may be an array.
    """
    return _closed(t, s, k, m, "sigma")


def dsigma_ds(t: float, s: float, k: float, m: MeasureSpec) -> float:
    """``d Sigma / ds`` at ``(t, s)``; positive whenever ``T^{-1}(t) <= s``."""
    _check_k(k)
    tr = m.transform(s)
    if _near_axis(t, _T(s, k, tr)) > 0:
        raise DomainError(f"s={s!r} lies below T^-1({t!r})")
    return _dsigma_ds(t, k, tr)


def dell_ds(t: float, s: float, k: float, m: MeasureSpec) -> float:
    """``d ell / ds = L0'(s) - k t L1'(s) / (1 + t L1(s))``."""
    _check_k(k)
    tr = m.transform(s)
    if _near_axis(t, _T(s, k, tr)) > 0:
        raise DomainError(f"s={s!r} lies below T^-1({t!r})")
    return _dell_ds(t, k, tr)


# -- inverse maps -----------------------------------------------------------

def T_inverse(t: float, k: float, m: MeasureSpec) -> float:
    """The unique ``s > 0`` with ``T(s) = t``."""
    _check_k(k)
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"time must be positive, got {t!r}")
    # T(s)/s runs from 1/k (s -> 0) to 1 - exp(-1/k) (s -> inf)
    lo = 0.5 * k * t
    hi = 2.0 * t / -math.expm1(-1.0 / k)

    def f(s):
        return _T(s, k, m.transform(s)) - t

    def df(s):
        return _T_prime(s, k, m.transform(s))

    lo, hi, flo, fhi = expand_bracket(f, lo, hi)
    return newton_bisect(f, df, lo, hi, flo, fhi)


def zeta(t: float, target: float, k: float, m: MeasureSpec, s_min: float | None = None) -> float:
    """The unique ``sigma >= T^{-1}(t)`` with ``Sigma(t, sigma) = target``.

    ``s_min`` may pass a precomputed ``T^{-1}(t)``.
    """
    _check_k(k)
    if not t > 0:
        raise DomainError(f"time must be positive, got {t!r}")
    if not target >= 0:
        raise DomainError(f"target must be non-negative, got {target!r}")
    lo = T_inverse(t, k, m) if s_min is None else s_min
    if target == 0:
        return lo
    # dSigma/dt >= -(1 + k), hence Sigma(t, target + (1 + k) t) >= target
    hi = target + (1.0 + k) * t

    def f(sig):
        return _sigma(t, sig, k, m.transform(sig)) - target

    def df(sig):
        return _dsigma_ds(t, k, m.transform(sig))

    flo = f(lo)
    if flo >= 0:
        return lo
    return newton_bisect(f, df, lo, hi, flo)


# -- ODE oracle ---------------------------------------------------------------

@dataclass(frozen=True)
class CharacteristicPath:
    """A sampled characteristic ``t -> (Sigma, ell)`` up to its hitting time."""

    s0: float
    k: float
    t: np.ndarray
    sigma: np.ndarray
    ell: np.ndarray
    T_hit: float
    one_minus_ell: np.ndarray | None = None

    @property
    def samples(self):
        return list(zip(self.t.tolist(), self.sigma.tolist(), self.ell.tolist()))

    def __post_init__(self):
        if self.one_minus_ell is None:
            object.__setattr__(self, "one_minus_ell", 1.0 - self.ell)

    def __len__(self):
        return self.t.size


def _rk4(sig, u, h, k):
    # one classical RK4 step in (Sigma, u = 1 - ell): dSigma/dt = -u - k,
    # du/dt = -k u / Sigma; u keeps full relative precision as it tends to 0
    k1s = -u - k
    k1u = -k * u / sig
    s2, u2 = sig + 0.5 * h * k1s, u + 0.5 * h * k1u
    k2s = -u2 - k
    k2u = -k * u2 / s2
    s3, u3 = sig + 0.5 * h * k2s, u + 0.5 * h * k2u
    k3s = -u3 - k
    k3u = -k * u3 / s3
    s4, u4 = sig + h * k3s, u + h * k3u
    k4s = -u4 - k
    k4u = -k * u4 / s4
    return (sig + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u))


def integrate_characteristics_oracle(s: float, k: float, m: MeasureSpec,
                                     dt: float | None = None) -> CharacteristicPath:
    """Integrate the characteristic ODEs from ``(s, L0(s))`` with fixed-step RK4.

    This never uses the closed forms: it is the independent check on them.
    Fixed steps of size ``dt`` (default ``min(1e-4, T_guess / 1e4)`` with
    ``T_guess = s / k``) run while ``Sigma`` stays well above ``(1 + k) dt``.
    The state is carried as ``(Sigma, 1 - ell)``, the same system written in
    the complementary variable, so that ``1 - ell`` keeps full relative
    precision near the endpoint.  The approach to the singular endpoint then uses steps that halve the
    remaining ``Sigma`` until ``Sigma <= k dt``, and the hitting time is
    extrapolated from the local quadratic Taylor model of ``Sigma``.
    """
    _check_k(k)
    if not s > 0:
        raise DomainError("starting point must be positive")
    if dt is None:
        dt = min(1e-4, (s / k) / 1e4)
    if not dt > 0:
        raise DomainError("step must be positive")
    tr = m.transform(s)
    sig, u = float(s), -s * tr[2]  # u = 1 - L0(s) without cancellation
    t = 0.0
    ts, sigs, us = [t], [sig], [u]
    append_t, append_s, append_u = ts.append, sigs.append, us.append
    safe = 20.0 * (1.0 + k) * dt
    n = 0
    while sig > safe:
        n += 1
        sig, u = _rk4(sig, u, dt, k)
        t = n * dt
        append_t(t)
        append_s(sig)
        append_u(u)
    stop = k * dt
    while sig > stop:
        h = 0.05 * sig / (1.0 + k)
        sig, u = _rk4(sig, u, h, k)
        t += h
        append_t(t)
        append_s(sig)
        append_u(u)
    d1 = -u - k
    d2 = k * u / sig
    disc = d1 * d1 - 2.0 * d2 * sig
    if disc < 0:
        raise OracleInconsistency("no terminal crossing in the Taylor model")
    T_hit = t + 2.0 * sig / (-d1 + math.sqrt(disc))
    t_arr = np.array(ts)
    s_arr = np.array(sigs)
    u_arr = np.array(us)
    _validate_path(t_arr, s_arr, u_arr, k)
    t_arr = np.append(t_arr, T_hit)
    s_arr = np.append(s_arr, 0.0)
    u_arr = np.append(u_arr, 0.0)
    return CharacteristicPath(float(s), float(k), t_arr, s_arr, 1.0 - u_arr, T_hit, u_arr)


def _validate_path(t, sig, u, k):
    if np.any(sig <= 0) or np.any(u <= 0) or np.any(u > 1):
        raise OracleInconsistency("path left the region Sigma > 0, 0 <= ell < 1")
    slope = np.diff(sig) / np.diff(t)
    if np.any(slope >= -k + 1e-12 * (1.0 + k)):
        raise OracleInconsistency("Sigma slope not below -k")
    if np.any(np.diff(u) >= 0):
        raise OracleInconsistency("ell not increasing")


def conserved_quantity(path: CharacteristicPath) -> np.ndarray:
    """``ln Sigma - ln(1 - ell) + ell / k`` on all samples before ``T_hit``."""
    sig, u = path.sigma[:-1], path.one_minus_ell[:-1]
    return np.log(sig) - np.log(u) + (1.0 - u) / path.k
