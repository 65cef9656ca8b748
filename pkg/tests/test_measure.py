from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from gelfree.errors import MeasureError
from gelfree.measure import (MeasureSpec, check_complete_monotone, eval_transform, parse_measure,
                             total_mass)

FAMILIES = {
    "mono": MeasureSpec.monodisperse(),
    "atomic": MeasureSpec.atomic([(0.5, 0.5), (2.0, 0.5)]),
    "exp": MeasureSpec.exponential(1.0),
    "exp3": MeasureSpec.exponential(3.0),
    "powertail": MeasureSpec.power_tail(2.0, 1.0),
    "powertail3": MeasureSpec.power_tail(3.0, 0.5),
}


def test_total_mass_examples():
    assert total_mass(MeasureSpec.atomic([(1.0, 1.0)])) == pytest.approx(1.0, abs=1e-15)
    assert total_mass(MeasureSpec.atomic([(0.5, 0.5), (2.0, 0.5)])) == pytest.approx(1.0, abs=1e-15)
    assert total_mass(MeasureSpec.power_tail(2.0, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_unnormalized_atoms_rejected():
    with pytest.raises(MeasureError):
        MeasureSpec.atomic([(1.0, 0.7)])
    with pytest.raises(MeasureError):
        MeasureSpec.atomic([(0.0, 1.0)])
    assert total_mass(MeasureSpec.atomic([(1.0, 2.0), (3.0, 2.0)], normalize=True)) == pytest.approx(1.0)


def test_unit_atom_transform():
    tv = eval_transform(MeasureSpec.atomic([(1.0, 1.0)]), 1.0)
    assert tv.L0 == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert eval_transform(MeasureSpec.monodisperse(), 1e-9).L1 == pytest.approx(-1.0, rel=1e-8)


def test_exponential_transform():
    assert eval_transform(MeasureSpec.exponential(1.0), 1.0).L0 == pytest.approx(0.5, rel=1e-15)


def test_power_tail_against_quadrature():
    expected = math.exp(-1.0) - special.exp1(1.0)
    assert expected == pytest.approx(0.1484955, abs=1e-7)
    quad, _ = integrate.quad(lambda x: math.exp(-x) / x**2, 1.0, np.inf, epsabs=1e-14)
    tv = eval_transform(MeasureSpec.power_tail(2.0, 1.0), 1.0)
    assert tv.L0 == pytest.approx(expected, rel=1e-12)
    assert tv.L0 == pytest.approx(quad, rel=1e-10)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_transform_derivatives_match_finite_differences(name):
    m = FAMILIES[name]
    for s in (0.03, 0.7, 4.0):
        h = 1e-5 * s
        L0p, L0m = m.transform(s + h)[0], m.transform(s - h)[0]
        L1p, L1m = m.transform(s + h)[2], m.transform(s - h)[2]
        _, dL0, L1, dL1 = m.transform(s)
        assert dL0 == pytest.approx((L0p - L0m) / (2 * h), rel=1e-6)
        assert dL1 == pytest.approx((L1p - L1m) / (2 * h), rel=1e-6)
        # L1 is the difference quotient (L0 - 1) / s
        assert L1 == pytest.approx((m.transform(s)[0] - 1.0) / s, rel=1e-12)


def test_generic_density_matches_closed_form():
    rate = 1.7
    gen = MeasureSpec.generic(lambda x: rate * np.exp(-rate * x), (0.0, np.inf), label="exp-generic")
    ref = MeasureSpec.exponential(rate)
    for s in (1e-4, 0.1, 1.0, 30.0):
        assert gen.transform(s) == pytest.approx(ref.transform(s), rel=1e-9)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sign_invariants_on_log_grid(name):
    m = FAMILIES[name]
    for s in np.logspace(-6, 6, 49):
        L0, dL0, L1, dL1 = m.transform(s)
        # exp(-s x) underflows past s x ~ 745: strict signs only where representable
        if L0 > 1e-300:
            assert 0.0 < L0 < 1.0
            assert dL0 < 0.0
        else:
            assert L0 >= 0.0 and dL0 <= 0.0
        assert s * dL0 + 1.0 - L0 > 0.0
        assert L1 < 0.0
        assert dL1 > 0.0


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.05, 20.0), w=st.floats(0.05, 0.95), y=st.floats(0.05, 20.0),
       s=st.floats(1e-5, 1e3))
def test_atomic_transform_properties(x, w, y, s):
    m = MeasureSpec.atomic([(x, w), (y, 1.0 - w)]) if x != y else MeasureSpec.monodisperse(x)
    L0, dL0, L1, dL1 = m.transform(s)
    expect = w * math.exp(-s * x) + (1 - w) * math.exp(-s * y) if x != y else math.exp(-s * x)
    assert L0 == pytest.approx(expect, rel=1e-12, abs=1e-300)
    assert L1 < 0 < dL1
    assert dL0 <= 0


def test_sampling_is_seeded_and_matches_transform():
    m = MeasureSpec.exponential(1.0)
    a = m.sample(100_000, np.random.default_rng(4))
    b = m.sample(100_000, np.random.default_rng(4))
    assert np.array_equal(a, b)
    assert np.mean(np.exp(-a)) == pytest.approx(0.5, abs=0.005)
    for s in (0.5, 1.0, 2.0):
        assert abs(np.mean(np.exp(-s * a)) - m.transform(s)[0]) <= 3 / math.sqrt(a.size)


def test_atomic_sampling_proportional_allocation():
    m = MeasureSpec.atomic([(0.5, 0.25), (2.0, 0.75)])
    x = m.sample(1001, np.random.default_rng(0))
    assert set(np.unique(x)) == {0.5, 2.0}
    assert abs(np.sum(x == 0.5) - 250.25) < 1.0
    assert np.all(MeasureSpec.monodisperse().sample(1000, np.random.default_rng(1)) == 1.0)


def test_generic_without_sampler_cannot_be_sampled():
    gen = MeasureSpec.generic(lambda x: np.exp(-x), (0.0, np.inf))
    with pytest.raises(MeasureError):
        gen.sample(10, np.random.default_rng(0))


def test_complete_monotone_check():
    grid = np.linspace(0.1, 5.0, 20)
    assert check_complete_monotone(lambda s: math.exp(-s), grid, 8).passed
    rep = check_complete_monotone(lambda s: s, grid, 2)
    assert not rep.passed
    assert {order for _, order, _ in rep.violations} == {1}


@pytest.mark.parametrize("text,expected", [
    ("mono", "mono"), ("mono:2", None), ("exp:2.5", None), ("powertail:2", None),
    ("atomic:0.5@0.5,2@0.5", None),
])
def test_parse_measure(text, expected):
    m = parse_measure(text)
    assert total_mass(m) == pytest.approx(1.0, abs=1e-10)
    if expected:
        assert m.describe() == expected


@pytest.mark.parametrize("bad", ["", "gamma:2", "exp:-1", "atomic:1@", "atomic:0.5@1,2@1", "powertail:0.5"])
def test_parse_measure_rejects(bad):
    with pytest.raises((MeasureError, ValueError)):
        parse_measure(bad)
