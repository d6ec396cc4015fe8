import math

import numpy as np
import pytest

from scalarflat import BoundaryField, Chart, ChartError, ScalarField
from scalarflat.chart import sphere_area


def test_sphere_area_values():
    assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert sphere_area(4) == pytest.approx(2.0 * math.pi ** 2, rel=1e-14)


def test_radial_chart_basic():
    c = Chart.radial(3, 11)
    assert c.shape == (11,)
    assert c.mode == "radial-1D"
    assert c.s[0] == 0.0 and c.s[-1] == 1.0
    assert np.isinf(c.r[0]) and c.r[-1] == 1.0
    assert c.ds == pytest.approx(0.1)


def test_axisym_chart_basic():
    c = Chart.axisymmetric(11, 5)
    assert c.shape == (11, 5)
    assert c.boundary_shape == (5,)
    assert c.theta[0] == 0.0 and c.theta[-1] == pytest.approx(math.pi)


def test_chart_validation():
    with pytest.raises(ChartError):
        Chart(2, np.linspace(0, 1, 5))
    with pytest.raises(ChartError):
        Chart(3, np.linspace(0.1, 1, 5))
    with pytest.raises(ChartError):
        Chart(3, [0.0, 0.5, 0.4, 1.0])
    with pytest.raises(ChartError):
        # axisymmetric mode is n=3 only
        Chart(4, np.linspace(0, 1, 5), np.linspace(0, math.pi, 5))


def test_chart_equality_and_hash():
    a = Chart.radial(3, 21)
    b = Chart.radial(3, 21)
    c = Chart.radial(3, 22)
    assert a == b and hash(a) == hash(b)
    assert a != c


def test_weights_shell_volume():
    # volume of {1 <= r <= 2} = 4/3 pi (8 - 1)
    c = Chart.radial(3, 2001)
    ind = np.where(c.r <= 2.0, 1.0, 0.0)
    vol = float(np.sum(c.weights * ind))
    exact = 4.0 / 3.0 * math.pi * 7.0
    assert vol == pytest.approx(exact, rel=5e-3)


def test_flat_integral_clipped_region():
    c = Chart.radial(3, 801)
    vals = np.ones(c.shape)
    exact = 4.0 / 3.0 * math.pi * (3.5 ** 3 - 1.3 ** 3)
    approx = c.flat_integral(vals, r_min=1.3, r_max=3.5)
    assert approx == pytest.approx(exact, rel=1e-4)


def test_flat_integral_axisym_matches_radial():
    cr = Chart.radial(3, 201)
    ca = Chart.axisymmetric(201, 129)
    fr = np.where(cr.s > 0, cr.s ** 4, 0.0)
    fa = np.repeat(fr[:, None], 129, axis=1)
    # theta quadrature of sin(theta) converges at O(h_theta^2)
    assert ca.flat_integral(fa, r_max=10.0) == pytest.approx(
        cr.flat_integral(fr, r_max=10.0), rel=1e-4)


def test_d_ds_orders():
    c = Chart.radial(3, 101)
    v = np.sin(2.0 * c.s)
    exact = 2.0 * np.cos(2.0 * c.s)
    e2 = np.max(np.abs(c.d_ds(v, order=2) - exact))
    e4 = np.max(np.abs(c.d_ds(v, order=4) - exact))
    assert e2 < 1e-3
    assert e4 < 1e-6
    with pytest.raises(ChartError):
        c.d_ds(v, order=3)


def test_d_dr_vanishes_at_infinity():
    c = Chart.radial(3, 101)
    v = 1.0 + c.s  # u = 1 + 1/r
    dr = c.d_dr(v)
    assert dr[0] == 0.0
    # du/dr = -1/r^2 = -s^2
    assert np.max(np.abs(dr[1:] + c.s[1:] ** 2)) < 1e-10


def test_d_dtheta_pole_reflection():
    c = Chart.axisymmetric(5, 33)
    v = np.cos(c.theta)[None, :] * np.ones((5, 1))
    dt = c.d_dtheta(v)
    assert np.all(dt[:, 0] == 0.0) and np.all(dt[:, -1] == 0.0)
    mid = slice(1, -1)
    assert np.max(np.abs(dt[:, mid] + np.sin(c.theta)[None, mid])) < 5e-3


def test_scalar_field_from_function():
    c = Chart.radial(3, 11)
    u = ScalarField.from_function(c, lambda r: 1.0 if np.isinf(r) else 1.0 + 1.0 / r)
    assert u.values[0] == 1.0
    assert u.values[-1] == 2.0
    assert u.boundary_values().shape == (1,)


def test_field_shape_validation():
    c = Chart.radial(3, 11)
    with pytest.raises(ChartError):
        ScalarField(c, np.ones(7))
    with pytest.raises(ChartError):
        ScalarField(c, np.full(11, np.nan))
    with pytest.raises(ChartError):
        BoundaryField(c, np.ones(3))


def test_boundary_field_constant():
    c = Chart.axisymmetric(7, 9)
    b = BoundaryField.constant(c, 2.5)
    assert b.values.shape == (9,)
    assert np.all(b.values == 2.5)
