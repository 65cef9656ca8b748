"""
Characteristics: closed form against direct integration
=======================================================

Along a characteristic the pair ``(Sigma, ell)`` obeys two ODEs.  Their
closed-form solution is compared with a fourth-order Runge-Kutta run that
stops where ``Sigma`` reaches the axis.
"""

import numpy as np

from gelfree import MeasureSpec, characteristics as ch

m = MeasureSpec.exponential(1.0)
s, k = 2.0, 0.7
path = ch.integrate_characteristics_oracle(s, k, m)

print(f"steps={len(path)}  T_hit={path.T_hit:.15f}  closed form T={ch.time_to_axis(s, k, m):.15f}")

t = path.t[:-1]
err_ell = np.max(np.abs(ch.ell_closed(t, s, k, m) / path.ell[:-1] - 1))
err_sig = np.max(np.abs(ch.sigma_closed(t, s, k, m) / path.sigma[:-1] - 1))
print(f"max relative gap  ell={err_ell:.2e}  Sigma={err_sig:.2e}")

# %%
# ``ln Sigma - ln(1 - ell) + ell / k`` is conserved along every path.
q = ch.conserved_quantity(path)
print(f"conserved quantity spread: {np.ptp(q):.2e}")

# %%
# The hitting time interpolates between ``s / k`` and ``(1 - e^{-1/k}) s``.
for s in (1e-4, 1e-2, 1.0, 1e2, 1e4):
    T = ch.time_to_axis(s, k, m)
    print(f"s={s:8g}  T k/s={T * k / s:.5f}  T/((1-e^(-1/k)) s)={T / (-np.expm1(-1 / k) * s):.5f}")
