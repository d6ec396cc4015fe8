import math

import numpy as np
import pytest

from scalarflat import (RadialProblem, SolveError, mean_curvature_root_threshold,
                        radial_dirichlet_yamabe, radial_mean_curvature,
                        radial_solve_linear)


def test_spectral_dirichlet_exact():
    p = RadialProblem(n=3, bc=("dirichlet", 2.0), limit=1.0)
    s, u, est = radial_solve_linear(p)
    # harmonic interpolant 1 + 1/r
    assert est < 1e-11
    assert np.max(np.abs(u - (1.0 + s))) < 1e-11


def test_spectral_robin():
    p = RadialProblem(n=3, bc=("robin", 1.0, 0.0), limit=1.0)
    s, u, est = radial_solve_linear(p)
    assert np.max(np.abs(u - (1.0 - 0.5 * s))) < 1e-11


def test_spectral_variable_coefficients():
    # nontrivial c and src still meet the self-consistency estimate
    p = RadialProblem(n=4, c=lambda r: -1.0 / r ** 5,
                      src=lambda r: 1.0 / r ** 5,
                      bc=("dirichlet", 0.5), limit=0.0)
    s, u, est = radial_solve_linear(p)
    assert est < 1e-11
    assert u[0] == pytest.approx(0.0, abs=1e-12)
    assert u[-1] == pytest.approx(0.5, abs=1e-12)


def test_bad_bc_kind():
    with pytest.raises(ValueError):
        radial_solve_linear(RadialProblem(n=3, bc=("neumann", 1.0)))


def test_yamabe_closed_form():
    s, phi = radial_dirichlet_yamabe(
        lambda r: 1.0 if np.isinf(r) else 1.0 + r ** -2.0, 3)
    exact = (1.0 + s) / (1.0 + s ** 2)
    assert np.max(np.abs(phi - exact)) < 1e-13


def test_yamabe_rejects_bad_u0():
    with pytest.raises(SolveError):
        radial_dirichlet_yamabe(lambda r: 2.0, 3)  # limit is not 1


def test_threshold_value():
    assert mean_curvature_root_threshold(3.0) == pytest.approx(4.0 / 27.0,
                                                               abs=1e-15)
    assert math.isinf(mean_curvature_root_threshold(1.0))


def test_threshold_matches_maximization():
    # max_a a/(1+a)^beta by brute scan
    for beta in (2.0, 3.0, 4.5):
        a = np.linspace(1e-6, 50.0, 2000001)
        brute = np.max(a / (1.0 + a) ** beta)
        # the brute scan resolves the quadratic maximum to ~(da)^2
        assert mean_curvature_root_threshold(beta) == pytest.approx(
            brute, rel=1e-8)


def test_mean_curvature_roots():
    a, profile = radial_mean_curvature(0.1, 3.0, 3)
    assert 1.0 * a == pytest.approx(0.1 * (1.0 + a) ** 3, abs=1e-11)
    assert profile(1.0) == pytest.approx(1.0 + a)
    assert profile(float("inf")) == pytest.approx(1.0)


def test_mean_curvature_negative_f():
    a, _ = radial_mean_curvature(-1.0, 3.0, 3)
    # x = 1 + a solves x^3 + x - 1 = 0
    x = 1.0 + a
    assert x ** 3 + x - 1.0 == pytest.approx(0.0, abs=1e-11)
    assert -1.0 < a < 0.0


def test_mean_curvature_no_root_above_threshold():
    assert radial_mean_curvature(0.16, 3.0, 3) is None


def test_mean_curvature_zero_f():
    a, _ = radial_mean_curvature(0.0, 3.0, 3)
    assert a == 0.0


def test_mean_curvature_beta_guard():
    with pytest.raises(ValueError):
        radial_mean_curvature(0.1, -1.0, 3)


def test_mean_curvature_sublinear_beta():
    # beta <= 1 with positive f always has a root
    a, _ = radial_mean_curvature(0.5, 1.0, 3)
    assert a == pytest.approx(0.5 * (1.0 + a), abs=1e-10)


def test_dimension_dependence():
    # n=4: a * 2 = f (1+a)^beta
    a, _ = radial_mean_curvature(0.1, 3.0, 4)
    assert 2.0 * a == pytest.approx(0.1 * (1.0 + a) ** 3, abs=1e-11)
