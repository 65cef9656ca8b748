from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from gelfree.errors import DomainError, InversionWarning
from gelfree.laplace import LaplaceEvaluator
from gelfree.measure import MeasureSpec, check_complete_monotone
from gelfree.selfsimilar import (SelfSimilarProfile, L_star, L_star_h_route, M_star, gaver_stehfest,
                                 h_eval, h_inverse, invert_profile, lambert_w, lambert_w_log,
                                 selfsim_error, stehfest_coefficients)


def _w_bisect(z):
    lo, hi = 0.0, max(1.0, math.log1p(z))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < z:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_lambert_examples():
    assert lambert_w(0.0) == 0.0
    assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-15)
    w = lambert_w(math.e**2)
    assert w == pytest.approx(1.55714559, abs=1e-8)
    assert w == pytest.approx(_w_bisect(math.e**2), rel=1e-14)


def test_lambert_residual_grid():
    for z in np.logspace(-8, 8, 161):
        w = lambert_w(z)
        assert abs(w * math.exp(w) - z) <= 1e-13 * max(1.0, z)
        assert w == pytest.approx(float(special.lambertw(z).real), rel=1e-14)


def test_lambert_log_form():
    for log_z in (2.0, 50.0, 700.0, 1e4, 1e8):
        w = lambert_w_log(log_z)
        assert w + math.log(w) == pytest.approx(log_z, rel=1e-15)
    with pytest.raises(DomainError):
        lambert_w(-0.1)


def test_L_star_examples():
    assert L_star(1.0, 0.0) == 1.0
    assert L_star(1.0, 1.0) == pytest.approx(2.0 - lambert_w(math.e**2), rel=1e-14)
    assert L_star(1.0, 1.0) == pytest.approx(0.442854, abs=1e-6)
    p = SelfSimilarProfile(1.0)
    vals = L_star(p, np.logspace(-3, 4, 50))
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > 0) & (vals < 1))


@pytest.mark.parametrize("k", [0.3, 1.0, 3.0])
def test_route_identity(k):
    for s in np.logspace(-2, 2, 41):
        assert abs(L_star(k, s) - L_star_h_route(k, s)) <= 1e-12


def test_h_endpoints_and_inverse():
    k, s = 1.0, 1.0
    assert h_eval(1.0, s, k) == s + 1
    assert h_eval(math.exp(-1 / k), s, k) == s * math.exp(-1 / k)
    assert -math.log(h_inverse(1.0, 1.0, 1.0)) == pytest.approx(L_star(1.0, 1.0), rel=1e-13)
    with pytest.raises(DomainError):
        h_eval(0.1, s, k)
    with pytest.raises(DomainError):
        h_inverse(3.0, s, k)


@settings(max_examples=50, deadline=None)
@given(k=st.floats(0.2, 5.0), s=st.floats(1e-3, 1e3), u=st.floats(0.0, 1.0))
def test_h_roundtrip(k, s, u):
    lo = math.exp(-1 / k)
    z = lo + u * (1 - lo)
    assert h_inverse(h_eval(z, s, k), s, k) == pytest.approx(z, abs=1e-12)


def test_L_star_completely_monotone():
    p = SelfSimilarProfile(1.0)
    assert check_complete_monotone(lambda s: L_star(p, s), np.linspace(0.1, 10.0, 34), 8, 1e-2, 1e-9).passed


def test_selfsim_error_decreases():
    p = SelfSimilarProfile(1.0)
    grid = np.linspace(0.1, 10.0, 34)
    ev = LaplaceEvaluator(MeasureSpec.exponential(1.0), 1.0)
    errs = [selfsim_error(ev, p, t, grid) for t in (1.0, 1e2, 1e4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-2
    # monodisperse data sits on the profile to rounding once exp(-zeta) underflows
    mono = LaplaceEvaluator(MeasureSpec.monodisperse(), 1.0)
    e1, e2, e4 = (selfsim_error(mono, p, t, grid) for t in (1.0, 1e2, 1e4))
    assert e2 <= 1e-14 and e4 <= 1e-14 < e1
    assert selfsim_error(mono, p, 5.0, [0.0]) <= 1e-15


def test_selfsim_error_k_mismatch():
    with pytest.raises(DomainError):
        selfsim_error(LaplaceEvaluator(MeasureSpec.monodisperse(), 2.0), SelfSimilarProfile(1.0), 1.0, [1.0])


def test_stehfest_coefficients():
    for n in (8, 12, 18):
        V = stehfest_coefficients(n)
        assert len(V) == n
        assert abs(sum(V)) < 1e-6 * max(abs(v) for v in V)
    assert gaver_stehfest(lambda s: 1.0 / (s + 1.0), 1.0, 14) == pytest.approx(math.exp(-1), rel=1e-4)


def test_M_star_examples():
    p = SelfSimilarProfile(1.0)
    assert M_star(p, 1e4) == pytest.approx(1.0, abs=5e-3)
    small = M_star(p, 1e-3)
    assert -5e-4 <= small <= 0.05
    assert abs(M_star(p, 1e-3, 10) - M_star(p, 1e-3, 14)) <= 1e-3


def test_M_star_transform_roundtrip():
    # int exp(-s x) dM(x) = s int exp(-s x) M(x) dx
    p = SelfSimilarProfile(1.0)
    x = np.concatenate(([0.0], np.logspace(-4, 2, 400)))
    M = np.concatenate(([0.0], M_star(p, x[1:])))
    val = integrate.trapezoid(np.exp(-x) * M, x)
    assert val == pytest.approx(L_star(p, 1.0), abs=1e-3)


def test_invert_profile_report():
    p = SelfSimilarProfile(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", InversionWarning)
        rep = invert_profile(p, np.logspace(-2, 2, 30))
    assert rep.stable and rep.order_gap <= 1e-3 and rep.monotone_gap <= 5e-4
    with pytest.warns(InversionWarning):
        bad = invert_profile(p, np.logspace(-2, 2, 30), check_orders=(8, 18), agree_tol=1e-12)
    assert not bad.stable


def test_profile_validation():
    with pytest.raises(DomainError):
        SelfSimilarProfile(0.0)
    with pytest.raises(DomainError):
        SelfSimilarProfile(1.0, inversion_order=11)
