import numpy as np
import pytest

from scalarflat import (Chart, ScalarField, TrialFamily, conformal_transform,
                        estimate_sobolev_quotient, flat_metric,
                        metric_from_spec, rayleigh_quotient)
from scalarflat.errors import ScalarFlatError

FAMILY = TrialFamily(centers=(3.0, 5.0, 8.0), widths=(1.0, 2.0))


def fine_chart():
    return Chart.radial(3, 3001)


def test_trial_vanishes_outside_support():
    c = fine_chart()
    t = FAMILY.evaluate(c, 3.0, 1.0)
    assert t.values[0] == 0.0    # infinity
    assert t.values[-1] == 0.0   # r = 1
    assert np.max(t.values) > 0.1


def test_family_validation():
    with pytest.raises(ScalarFlatError):
        TrialFamily(centers=(3.0,), widths=(1.0,), r_in=0.5)
    with pytest.raises(ScalarFlatError):
        TrialFamily(centers=(), widths=(1.0,))


def test_quotient_rejects_bad_trials():
    c = fine_chart()
    g = flat_metric(c)
    with pytest.raises(ScalarFlatError):
        rayleigh_quotient(g, ScalarField(c, np.zeros(c.shape)))
    with pytest.raises(ScalarFlatError):
        rayleigh_quotient(g, ScalarField(c, np.ones(c.shape)))


def test_quotient_scale_invariance():
    c = fine_chart()
    g = flat_metric(c)
    t = FAMILY.evaluate(c, 3.0, 1.0)
    q1 = rayleigh_quotient(g, t)
    q2 = rayleigh_quotient(g, ScalarField(c, 7.0 * t.values))
    assert q2 == pytest.approx(q1, rel=1e-12)


def test_conformal_invariance():
    # Q_g(phi f) = Q_{phi^{4/(n-2)} g}(f)
    c = fine_chart()
    g = flat_metric(c)
    phi = ScalarField(c, 1.0 + c.s)
    gt = conformal_transform(g, phi)
    t = FAMILY.evaluate(c, 4.0, 1.5)
    q_base = rayleigh_quotient(g, ScalarField(c, phi.values * t.values))
    q_tran = rayleigh_quotient(gt, t)
    assert abs(q_base - q_tran) / abs(q_base) < 1e-6


def test_estimate_deterministic():
    c = fine_chart()
    g = flat_metric(c)
    r1 = estimate_sobolev_quotient(g, FAMILY)
    r2 = estimate_sobolev_quotient(g, FAMILY)
    assert r1 == r2
    q, params, positive = r1
    assert positive and q > 0
    assert params in FAMILY.parameters()


def test_estimate_budget():
    c = fine_chart()
    g = flat_metric(c)
    q_all, p_all, _ = estimate_sobolev_quotient(g, FAMILY)
    q_one, p_one, _ = estimate_sobolev_quotient(g, FAMILY, budget=1)
    assert p_one == FAMILY.parameters()[0]
    assert q_all <= q_one + 1e-12
    with pytest.raises(ScalarFlatError):
        estimate_sobolev_quotient(g, FAMILY, budget=0)


def test_positive_on_benchmark_metric():
    c = fine_chart()
    g = metric_from_spec({"kind": "conformal", "coeffs": [1.0, 0.0, 1.0]}, c)
    q, _, positive = estimate_sobolev_quotient(g, FAMILY)
    assert positive and q > 0.0
