"""Exact stochastic simulation of the mass distribution ``nu(t)``.

The empirical measure ``(1/N) sum_i delta_{x_i}`` of ``N`` particles evolves
as a Markov jump process whose generator is the weak form of the equation:

* at rate ``x_i`` particle ``i`` coagulates: ``x_i -> x_i + x_J`` with ``J``
  uniform on all ``N`` particles (``J = i`` included),
* at rate ``k x_i`` it fragments: ``x_i -> U x_i`` with ``U ~ Uniform(0, 1)``.

So the total rate is ``R = (1 + k) sum_i x_i``, the jumping particle is
picked with probability ``x_i / sum_j x_j`` (a size-biased draw from a
Fenwick tree) and the jump is a coagulation with probability ``1/(1 + k)``.
Both jumps keep ``N`` fixed, so the total mass ``N * (1/N)`` never changes.
The fragmentation jump is exact: the mass-weighted daughter density of a
particle of mass ``y`` is uniform on ``(0, y)``.

With ``k = 0`` the same process is the pure multiplicative coagulation
baseline, which gels at ``t = 1`` for unit monodisperse data; runaway growth
is reported as :class:`~gelfree.errors.ExplosionDetected`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ExplosionDetected, StalledError
from .fenwick import FenwickTree
from .measure import MeasureSpec

__all__ = [
    "ParticleSystem",
    "EventRecord",
    "ObservationLog",
    "LaplaceObserver",
    "MomentObserver",
    "ScaledCDFObserver",
    "ExpTest",
    "MinTest",
    "init_from_measure",
    "step",
    "run_until",
    "empirical_laplace",
    "empirical_scaled_cdf",
    "weak_form_rhs",
    "replicate_seeds",
]

REBUILD_EVERY = 1_000_000
_BLOCK = 1 << 15


def replicate_seeds(seed: int, n: int) -> list[int]:
    """Independent child seeds for ``n`` replicates of a run seeded ``seed``.

    Children come from :meth:`numpy.random.SeedSequence.spawn`, so replicate
    ``i`` is the same whatever the number of workers.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass
class EventRecord:
    kind: str  # "coag" or "frag"
    index: int
    partner: int | None
    old_mass: float
    new_mass: float
    dt: float
    time: float


class ParticleSystem:
    """State of the ``N``-particle mass-flow process.

    Masses live in a plain list with a Fenwick tree over them; ``masses``
    returns a numpy copy.  Every particle carries weight ``1/N``.
    """

    def __init__(self, masses, k: float, seed: int | None = None,
                 rng: np.random.Generator | None = None):
        masses = np.asarray(masses, dtype=float)
        if masses.ndim != 1 or masses.size == 0:
            raise DomainError("need a non-empty 1-d array of masses")
        if not np.all(masses > 0) or not np.all(np.isfinite(masses)):
            raise DomainError("masses must be positive and finite")
        if not (k >= 0 and math.isfinite(k)):
            raise DomainError("k must be non-negative")
        self.k = float(k)
        self.n = int(masses.size)
        self.weight = 1.0 / self.n
        self._x = masses.tolist()
        self.tree = FenwickTree(self._x)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.sim_time = 0.0
        self.event_count = 0
        self.n_coag = 0
        self.n_frag = 0
        self.initial_mean = self.tree.total / self.n
        self._since_rebuild = 0
        self._buf = []
        self._pos = 0

    # -- state ------------------------------------------------------------

    @property
    def masses(self) -> np.ndarray:
        return np.array(self._x)

    @property
    def nu_mass(self) -> float:
        """Total mass of the empirical measure, ``N`` times ``1/N``."""
        return self.n * self.weight

    def mean_mass(self) -> float:
        return self.tree.total / self.n

    def rebuild_index(self):
        self.tree.rebuild(self._x)
        self._since_rebuild = 0

    def _uniforms(self, m):
        # uniforms come in blocks; the stream is a pure function of the seed
        if self._pos + m > len(self._buf):
            rest = self._buf[self._pos:]
            self._buf = rest + self.rng.random(_BLOCK).tolist()
            self._pos = 0
        out = self._buf[self._pos:self._pos + m]
        self._pos += m
        return out

    # -- dynamics ---------------------------------------------------------

    def step(self) -> EventRecord:
        """Apply one jump and advance the clock by an ``Exp(R)`` waiting time."""
        total = self.tree.total
        rate = (1.0 + self.k) * total
        if not rate > 1e-300:
            raise StalledError(f"total rate {rate!r} underflowed")
        u1, u2, u3, u4 = self._uniforms(4)
        dt = -math.log1p(-u1) / rate
        self.sim_time += dt
        i = self.tree.find(u2 * total)
        old = self._x[i]
        if u3 * (1.0 + self.k) < 1.0:
            j = min(int(u4 * self.n), self.n - 1)
            new = old + self._x[j]
            kind, partner = "coag", j
            self.n_coag += 1
        else:
            new = old * (1.0 - u4)
            kind, partner = "frag", None
            self.n_frag += 1
        self._x[i] = new
        self.tree.add(i, new - old)
        self.event_count += 1
        self._since_rebuild += 1
        if self._since_rebuild >= REBUILD_EVERY:
            self.rebuild_index()
        return EventRecord(kind, i, partner, old, new, dt, self.sim_time)

    def advance(self, t_end: float, event_cap: int | None = None,
                mean_cap: float | None = None):
        """Run jumps until ``sim_time`` reaches ``t_end``.

        The waiting time that would overshoot ``t_end`` is discarded and the
        clock set to ``t_end``; by memorylessness this is exact.
        """
        if t_end < self.sim_time:
            raise DomainError("cannot run backwards in time")
        x = self._x
        tree = self.tree.__dict__  # hot loop: bind everything locally
        ftree = self.tree._tree
        n = self.n
        top = self.tree._top
        onek = 1.0 + self.k
        log1p = math.log1p
        t = self.sim_time
        events = self.event_count
        cap = math.inf if event_cap is None else event_cap
        total_cap = math.inf if mean_cap is None else mean_cap * n
        total = tree["total"]
        ncoag = 0
        since = self._since_rebuild
        buf, pos = self._buf, self._pos
        try:
            while True:
                if pos + 4 > len(buf):
                    buf = buf[pos:] + self.rng.random(_BLOCK).tolist()
                    pos = 0
                u1, u2, u3, u4 = buf[pos], buf[pos + 1], buf[pos + 2], buf[pos + 3]
                pos += 4
                rate = onek * total
                if not rate > 1e-300:
                    raise StalledError(f"total rate {rate!r} underflowed")
                t_next = t - log1p(-u1) / rate
                if t_next > t_end:
                    t = t_end
                    break
                t = t_next
                # size-biased pick: smallest i with prefix(i) > u2 * total
                u = u2 * total
                p = 0
                stp = top
                while stp:
                    q = p + stp
                    if q <= n and ftree[q] <= u:
                        p = q
                        u -= ftree[q]
                    stp >>= 1
                i = p if p < n else n - 1
                old = x[i]
                if u3 * onek < 1.0:
                    j = int(u4 * n)
                    new = old + x[j if j < n else n - 1]
                    ncoag += 1
                else:
                    new = old * (1.0 - u4)
                x[i] = new
                d = new - old
                q = i + 1
                while q <= n:
                    ftree[q] += d
                    q += q & -q
                total += d
                events += 1
                since += 1
                if since >= REBUILD_EVERY:
                    tree["total"] = total
                    self.tree.rebuild(x)
                    ftree = self.tree._tree
                    total = tree["total"]
                    since = 0
                if events > cap:
                    raise ExplosionDetected(
                        f"event cap {event_cap} exceeded at t={t:.6g}",
                        sim_time=t, event_count=events, mean_mass=total / n)
                if total > total_cap or not math.isfinite(total):
                    raise ExplosionDetected(
                        f"mean mass {total / n:.6g} exceeded cap at t={t:.6g}",
                        sim_time=t, event_count=events, mean_mass=total / n)
        finally:
            self.sim_time = t
            self.n_frag += (events - self.event_count) - ncoag
            self.n_coag += ncoag
            self.event_count = events
            self._since_rebuild = since
            self._buf, self._pos = buf, pos
            tree["total"] = total


# -- observers ---------------------------------------------------------------

class LaplaceObserver:
    """Empirical transform ``(1/N) sum exp(-s x_i)`` with its standard error."""

    def __init__(self, s: float):
        if not s > 0:
            raise DomainError("s must be positive")
        self.s = float(s)
        self.name = f"laplace_s{s:g}"

    def __call__(self, system: ParticleSystem):
        v = np.exp(-self.s * system.masses)
        return float(v.mean()), _se(v)


class MomentObserver:
    """Empirical first moment of ``nu`` (mean particle mass)."""

    name = "mean_mass"

    def __call__(self, system: ParticleSystem):
        x = system.masses
        return float(x.mean()), _se(x)


class ScaledCDFObserver:
    """Fraction of particles below ``x / t`` for each ``x`` in a grid."""

    def __init__(self, x_grid):
        self.x_grid = np.asarray(x_grid, dtype=float)
        self.name = "scaled_cdf"

    def __call__(self, system: ParticleSystem):
        frac = empirical_scaled_cdf(system, self.x_grid)
        return frac, np.sqrt(frac * (1.0 - frac) / system.n)


def _se(v):
    return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan


@dataclass
class ObservationLog:
    """Observer output at each observation time of a run."""

    times: list = field(default_factory=list)
    event_counts: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def estimates(self, name):
        return [est for est, _ in self.series[name]]

    def body(self):
        """Everything except wall time; equal for equal seeds and configs."""
        return (self.times, self.event_counts,
                {k: [(np.asarray(a).tolist(), np.asarray(b).tolist()) for a, b in v]
                 for k, v in self.series.items()})


# -- functional interface ------------------------------------------------------

def init_from_measure(m: MeasureSpec, N: int, seed: int, k: float = 1.0) -> ParticleSystem:
    """``N`` particles with masses sampled from ``m`` using a seeded generator."""
    if N < 1:
        raise DomainError("N must be at least 1")
    rng = np.random.default_rng(seed)
    masses = m.sample(int(N), rng)
    return ParticleSystem(masses, k, rng=rng)


def step(system: ParticleSystem) -> EventRecord:
    return system.step()


def run_until(system: ParticleSystem, t_end: float, observers=(), observe_at=None,
              event_cap: int | None = None, mean_cap: float | None = 1e3) -> ObservationLog:
    """Advance to ``t_end`` and sample every observer at each ``observe_at`` time.

    ``observe_at`` defaults to ``[t_end]``.  ``mean_cap`` bounds the mean mass
    as a multiple of its initial value; ``event_cap`` bounds the total number
    of events.  Exceeding either raises :class:`ExplosionDetected`.
    """
    if not t_end > system.sim_time:
        raise DomainError("t_end must exceed the current time")
    times = sorted(float(t) for t in (observe_at if observe_at is not None else [t_end]))
    if times and (times[0] < system.sim_time or times[-1] > t_end):
        raise DomainError("observation times must lie in [sim_time, t_end]")
    if not times or times[-1] < t_end:
        times.append(float(t_end))
    cap = None if mean_cap is None else mean_cap * system.initial_mean
    log = ObservationLog(series={obs.name: [] for obs in observers})
    start = time.perf_counter()
    for t_obs in times:
        system.advance(t_obs, event_cap=event_cap, mean_cap=cap)
        log.times.append(system.sim_time)
        log.event_counts.append(system.event_count)
        for obs in observers:
            log.series[obs.name].append(obs(system))
    log.wall_time = time.perf_counter() - start
    return log


def empirical_laplace(system: ParticleSystem, s: float) -> float:
    """Unbiased estimate of ``L(sim_time, s)``."""
    if not s > 0:
        raise DomainError("s must be positive")
    return float(np.mean(np.exp(-s * system.masses)))


def empirical_scaled_cdf(system: ParticleSystem, x_grid) -> np.ndarray:
    """Fraction of particles with mass at most ``x / t``: the scaled ``M(t, x/t)``."""
    t = system.sim_time
    if not t > 0:
        raise DomainError("need sim_time > 0")
    x = np.sort(system.masses)
    return np.searchsorted(x, np.asarray(x_grid, dtype=float) / t, side="right") / system.n


# -- test functions for the weak form ------------------------------------------

class ExpTest:
    """``theta(x) = exp(-s x)``."""

    def __init__(self, s):
        self.s = float(s)

    def __call__(self, x):
        return np.exp(-self.s * np.asarray(x))

    def antiderivative(self, x):
        return -np.expm1(-self.s * np.asarray(x)) / self.s

    def coag_sum(self, x):
        # sum_j theta(x_i + x_j) for every i, factorised
        e = np.exp(-self.s * x)
        return e * e.sum()


class MinTest:
    """``theta(x) = min(x, c)``."""

    def __init__(self, c):
        self.c = float(c)

    def __call__(self, x):
        return np.minimum(np.asarray(x), self.c)

    def antiderivative(self, x):
        x = np.asarray(x)
        c = self.c
        return np.where(x <= c, 0.5 * x * x, c * x - 0.5 * c * c)

    def coag_sum(self, x):
        # sum_j min(x_i + x_j, c): partners with x_j <= c - x_i contribute x_i + x_j
        c = self.c
        xs = np.sort(x)
        csum = np.concatenate(([0.0], np.cumsum(xs)))
        cnt = np.searchsorted(xs, c - x, side="right")
        return cnt * x + csum[cnt] + (x.size - cnt) * c


def weak_form_rhs(masses, theta, k: float) -> float:
    """Right side of the weak form evaluated on the empirical measure of ``masses``.

    ``(1/N^2) sum_{i,j} x_i [theta(x_i + x_j) - theta(x_i)]``
    ``+ (k/N) sum_i [int_0^{x_i} theta - x_i theta(x_i)]``.
    """
    x = np.asarray(masses, dtype=float)
    n = x.size
    th = theta(x)
    coag = float(np.sum(x * (theta.coag_sum(x) / n - th))) / n
    frag = k * float(np.mean(theta.antiderivative(x) - x * th))
    return coag + frag
