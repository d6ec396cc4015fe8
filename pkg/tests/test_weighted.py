import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalarflat import (Chart, InvalidNormSpec, ScalarField, WeightedNormSpec,
                        decay_fit, mass_coefficient, weighted_norm)

CHART = Chart.radial(3, 201)


def field(values):
    return ScalarField(CHART, values)


# -- spec parsing -----------------------------------------------------------

def test_spec_parse_roundtrip():
    for text in ("L(2,-1)", "W(1,2,-0.5)", "L(inf,0)"):
        spec = WeightedNormSpec.parse(text)
        assert WeightedNormSpec.parse(str(spec)) == spec


def test_spec_validation():
    with pytest.raises(InvalidNormSpec):
        WeightedNormSpec(p=0.5, delta=0.0)
    with pytest.raises(InvalidNormSpec):
        WeightedNormSpec(p=2, delta=0.0, k=-1)
    with pytest.raises(InvalidNormSpec):
        WeightedNormSpec.parse("Q(2,1)")
    with pytest.raises(InvalidNormSpec):
        WeightedNormSpec.parse("L(2)")


# -- analytic examples ------------------------------------------------------

def test_sup_norm_r_inverse():
    # u = 1/r, p=inf, delta=-1: r^{1} * r^{-1} = 1 everywhere
    u = field(CHART.s.copy())
    spec = WeightedNormSpec(p=math.inf, delta=-1.0)
    assert weighted_norm(u, spec) == pytest.approx(1.0, abs=1e-12)


def test_l2_norm_sqrt_2pi():
    # u = r^-2, p=2, delta=-1: norm^2 = 4 pi int_1^inf r^-3 dr = 2 pi
    c = Chart.radial(3, 4001)
    u = ScalarField(c, c.s ** 2)
    spec = WeightedNormSpec(p=2, delta=-1.0)
    assert weighted_norm(u, spec) == pytest.approx(math.sqrt(2.0 * math.pi),
                                                   rel=1e-5)


def test_zero_field():
    z = field(np.zeros(CHART.shape))
    for spec in (WeightedNormSpec(1, 0.0), WeightedNormSpec(2, -1.0),
                 WeightedNormSpec(math.inf, 2.0, 1)):
        assert weighted_norm(z, spec) == 0.0


def test_quadrature_convergence():
    # u = r^-2.5, p=2, delta=-1: norm^2 = 4 pi int_0^1 s^2 ds = 4 pi / 3
    exact = math.sqrt(4.0 * math.pi / 3.0)
    spec = WeightedNormSpec(p=2, delta=-1.0)
    errs = []
    for num in (101, 201, 401):
        c = Chart.radial(3, num)
        errs.append(abs(weighted_norm(ScalarField(c, c.s ** 2.5), spec)
                        - exact))
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_sobolev_norm_includes_derivatives():
    u = field(CHART.s.copy())
    l2 = weighted_norm(u, WeightedNormSpec(2, -0.5))
    w12 = weighted_norm(u, WeightedNormSpec(2, -0.5, k=1))
    w22 = weighted_norm(u, WeightedNormSpec(2, -0.5, k=2))
    assert w22 > w12 > l2 > 0


def test_derivative_order_limit():
    u = field(CHART.s.copy())
    with pytest.raises(InvalidNormSpec):
        weighted_norm(u, WeightedNormSpec(2, 0.0, k=3))


# -- property tests ---------------------------------------------------------

amplitudes = st.lists(
    st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
    min_size=3, max_size=3)


def make_field(amps):
    a, b, c = amps
    return field(a * CHART.s + b * CHART.s ** 2 + c * np.sin(3 * CHART.s))


@settings(max_examples=100, deadline=None)
@given(amps=amplitudes,
       scale=st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
       p=st.sampled_from([1.0, 2.0, math.inf]),
       delta=st.floats(min_value=-3.0, max_value=3.0))
def test_homogeneity(amps, scale, p, delta):
    u = make_field(amps)
    spec = WeightedNormSpec(p=p, delta=delta)
    lhs = weighted_norm(field(scale * u.values), spec)
    rhs = abs(scale) * weighted_norm(u, spec)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(amps=amplitudes,
       p=st.sampled_from([1.0, 2.0, math.inf]),
       d1=st.floats(min_value=-3.0, max_value=3.0),
       gap=st.floats(min_value=0.0, max_value=3.0))
def test_delta_monotonicity(amps, p, d1, gap):
    # supported in r >= 1: smaller delta means a larger (or equal) norm
    u = make_field(amps)
    lo = weighted_norm(u, WeightedNormSpec(p=p, delta=d1))
    hi = weighted_norm(u, WeightedNormSpec(p=p, delta=d1 + gap))
    assert lo >= hi - 1e-12 * max(1.0, abs(hi))


@settings(max_examples=100, deadline=None)
@given(a1=amplitudes, a2=amplitudes,
       p=st.sampled_from([1.0, 2.0, math.inf]),
       delta=st.floats(min_value=-2.0, max_value=2.0))
def test_triangle_inequality(a1, a2, p, delta):
    u, v = make_field(a1), make_field(a2)
    spec = WeightedNormSpec(p=p, delta=delta)
    s = weighted_norm(field(u.values + v.values), spec)
    assert s <= weighted_norm(u, spec) + weighted_norm(v, spec) + 1e-10


# -- decay fits -------------------------------------------------------------

def test_decay_fit_exact_member():
    u = ScalarField.from_function(
        CHART, lambda r: 1.0 if np.isinf(r) else 1.0 + 1.0 / r)
    fit = decay_fit(u)
    assert fit.status == "ok"
    assert fit.u_inf == pytest.approx(1.0, abs=1e-12)
    assert fit.a == pytest.approx(1.0, rel=1e-8)
    assert fit.q == pytest.approx(1.0, rel=1e-8)
    assert fit.residual < 1e-10


def test_decay_fit_with_tail_correction():
    c = Chart.radial(3, 200)
    u = ScalarField.from_function(
        c, lambda r: 1.0 if np.isinf(r) else 1.0 + 2.0 / r + 5.0 / r ** 3)
    fit = decay_fit(u)
    assert fit.status == "ok"
    assert fit.u_inf == pytest.approx(1.0, abs=1e-12)
    assert fit.a == pytest.approx(2.0, rel=0.01)
    assert fit.q == pytest.approx(1.0, rel=0.01)


def test_decay_fit_constant():
    fit = decay_fit(field(np.ones(CHART.shape)))
    assert fit.status == "constant"
    assert fit.a == 0.0


def test_decay_fit_no_decay():
    # values growing toward infinity: log fit gives q <= 0
    vals = 1.0 + np.where(CHART.s > 0, np.where(CHART.s > 0, CHART.s, 1.0)
                          ** -0.5, 0.0)
    vals[0] = 0.0
    fit = decay_fit(ScalarField(CHART, vals))
    assert fit.status == "no-decay"


def test_mass_coefficient_schwarzschild():
    # phi = 1 + 1/r has m = 2 exactly
    phi = field(1.0 + CHART.s)
    assert mass_coefficient(phi) == pytest.approx(2.0, rel=1e-10)
