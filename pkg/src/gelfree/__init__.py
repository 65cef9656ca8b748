"""Exact and Monte Carlo solutions of multiplicative coagulation with linear fragmentation.

The model has kernel ``K(x, y) = x y``, fragmentation rate ``k x`` and
uniform daughter masses.  Fragmentation of any strength ``k > 0`` prevents
gelation; the mass-weighted distribution has an explicit Laplace transform
built from characteristics, and converges to a self-similar profile.
"""
from __future__ import annotations

from .characteristics import (CharacteristicPath, T_inverse, conserved_quantity, ell_closed,
                              integrate_characteristics_oracle, sigma_closed, time_to_axis, zeta)
from .errors import (ConvergenceError, DomainError, ExplosionDetected, GelfreeError,
                     InversionWarning, MeasureError, OracleInconsistency, PastSingularityError,
                     StalledError)
from .laplace import LaplaceEvaluator, moment_asymptote
from .massflow import (LaplaceObserver, MomentObserver, ObservationLog, ParticleSystem,
                       ScaledCDFObserver, init_from_measure, run_until)
from .measure import MeasureSpec, check_complete_monotone, parse_measure
from .selfsimilar import SelfSimilarProfile, L_star, M_star, invert_profile, lambert_w

__version__ = "0.1.0"
