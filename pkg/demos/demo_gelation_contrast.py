"""
Fragmentation prevents gelation
===============================

Without fragmentation the multiplicative kernel drives the mean mass to
blow up near ``t = 1``.  Any ``k > 0`` keeps it bounded.
"""

from gelfree import ExplosionDetected, LaplaceEvaluator, MeasureSpec, MomentObserver
from gelfree import init_from_measure, run_until

m = MeasureSpec.monodisperse()
times = [0.25, 0.5, 0.75, 0.9, 0.95]

system = init_from_measure(m, 10_000, 3, k=0.0)
try:
    log = run_until(system, 2.0, [MomentObserver()], observe_at=times)
except ExplosionDetected as exc:
    print(f"k=0: explosion at t={exc.sim_time:.4f} after {exc.event_count} events, "
          f"mean mass {exc.mean_mass:.1f}")

# %%
# Same seed and particle number with ``k = 1``; the exact first moment serves
# as the reference.
ev = LaplaceEvaluator(m, 1.0)
system = init_from_measure(m, 10_000, 3, k=1.0)
log = run_until(system, 2.0, [MomentObserver()], observe_at=times + [2.0])
for t, (est, se) in zip(log.times, log.series["mean_mass"]):
    print(f"k=1: t={t:4.2f}  mean={est:.4f} +- {se:.4f}  exact={ev.first_moment(t):.4f}")
