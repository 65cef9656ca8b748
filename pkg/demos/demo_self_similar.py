"""
Convergence to the self-similar profile
=======================================

Rescaled in time, the transform approaches ``L_star``.  Inverting
``L_star(s) / s`` gives the limiting distribution function ``M_star``, which a
particle simulation at ``t = 100`` reproduces.
"""

import numpy as np

from gelfree import (LaplaceEvaluator, MeasureSpec, SelfSimilarProfile, init_from_measure,
                     invert_profile, run_until)
from gelfree.massflow import empirical_scaled_cdf
from gelfree.selfsimilar import selfsim_error

k = 1.0
profile = SelfSimilarProfile(k)
ev = LaplaceEvaluator(MeasureSpec.exponential(1.0), k)
grid = np.linspace(0.1, 10.0, 34)
for t in (1.0, 1e1, 1e2, 1e3, 1e4):
    print(f"t={t:8g}  sup |L(t, ts) - L_star(s)| = {selfsim_error(ev, profile, t, grid):.3e}")

# %%
# Gaver-Stehfest inversion at order 12, checked against orders 10 and 14.
x = np.logspace(-2, 1.5, 15)
rep = invert_profile(profile, x)
print(f"order gap {rep.order_gap:.1e}, largest decrease {rep.monotone_gap:.1e}")

# %%
# A smaller particle system than the acceptance run, enough to see the fit.
system = init_from_measure(MeasureSpec.monodisperse(), 20_000, 1, k)
run_until(system, 100.0)
emp = empirical_scaled_cdf(system, x)
for xi, m_star, e in zip(x, rep.values, emp):
    print(f"x={xi:8.4f}  M_star={m_star:.4f}  particles={e:.4f}")
