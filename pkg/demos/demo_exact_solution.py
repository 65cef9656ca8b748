"""
The exact transform and its moments
===================================

Evaluate ``L(t, s)`` for monodisperse initial data, confirm that mass is
conserved, and watch ``t`` times the first moment settle on ``e^{1/k} - 1``.
"""

import numpy as np

from gelfree import LaplaceEvaluator, MeasureSpec, moment_asymptote

k = 1.0
ev = LaplaceEvaluator(MeasureSpec.monodisperse(), k)

# %%
# A few values of the transform.  ``L(t, 0)`` stays at one for every time.
s_grid = np.array([0.0, 0.5, 1.0, 2.0, 5.0])
for t in (0.1, 1.0, 10.0):
    print(f"t={t:5g}  L=", np.array2string(ev(t, s_grid), precision=6))

# %%
# The first moment equals ``-d_s L(t, 0)``.  It decays like ``1/t`` with an
# explicit constant, which is the signature of a mass-conserving flow
# without gelation.
for t in np.logspace(0, 4, 5):
    print(f"t={t:8.0f}  t*m1={t * ev.first_moment(t):.8f}")
print("limit:", moment_asymptote(k))

# %%
# Heavy-tailed data have an infinite first moment at time zero, yet the
# moment is finite for every positive time.
tail = LaplaceEvaluator(MeasureSpec.power_tail(2.0, 1.0), k)
for t in (1e-4, 1e-2, 1.0):
    print(f"power tail: t={t:g}  m1={tail.first_moment(t):.4f}")
