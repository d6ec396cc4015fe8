import numpy as np
import pytest

from scalarflat import (BoundaryField, Chart, ChartError, DirichletBC,
                        LinearProblem, NonConvergenceError, RobinBC,
                        ScalarField, assemble, constant_field, flat_metric,
                        solve_linear)


def flat_problem(chart, bc, limit=0.0, c=None, src=None):
    g = flat_metric(chart)
    return LinearProblem(metric=g, a=1.0,
                         c=c or constant_field(chart, 0.0),
                         src=src or constant_field(chart, 0.0),
                         bc=bc, limit=limit)


def test_dirichlet_harmonic_exact():
    # u(1)=1, u->0: u = 1/r, which the stencil reproduces to solver tolerance
    c = Chart.radial(3, 101)
    p = flat_problem(c, DirichletBC(BoundaryField.constant(c, 1.0)))
    res = solve_linear(p)
    assert res.converged
    assert res.residual <= 1e-10
    assert np.max(np.abs(res.solution.values - c.s)) < 1e-10


def test_robin_example():
    # gamma=1, h=0, limit=1: du/deta + u = 0 at r=1 gives u = 1 - (1/2) 1/r
    c = Chart.radial(3, 101)
    p = flat_problem(c, RobinBC(gamma=BoundaryField.constant(c, 1.0),
                                h=BoundaryField.constant(c, 0.0)), limit=1.0)
    res = solve_linear(p)
    assert np.max(np.abs(res.solution.values - (1.0 - 0.5 * c.s))) < 1e-10


def test_linearity():
    c = Chart.radial(3, 81)
    bc1 = DirichletBC(BoundaryField.constant(c, 1.0))
    bc2 = DirichletBC(BoundaryField.constant(c, 0.5))
    bc3 = DirichletBC(BoundaryField.constant(c, 1.5))
    u1 = solve_linear(flat_problem(c, bc1)).solution.values
    u2 = solve_linear(flat_problem(c, bc2)).solution.values
    u3 = solve_linear(flat_problem(c, bc3)).solution.values
    assert np.max(np.abs(u1 + u2 - u3)) < 1e-9


def test_discrete_maximum_principle_sample():
    # homogeneous operator, boundary data in [0,1]: solution stays in [0,1]
    c = Chart.axisymmetric(61, 17)
    vals = 0.5 + 0.5 * np.cos(c.theta) ** 2
    p = flat_problem(c, DirichletBC(BoundaryField(c, vals)))
    u = solve_linear(p).solution.values
    assert u.min() >= -1e-9
    assert u.max() <= 1.0 + 1e-9


def test_second_order_convergence():
    # manufactured non-polynomial solution u(s) = sin(pi s / 2):
    # Delta u = s^4 u_ss = -(pi^2/4) s^4 sin(pi s / 2) for n = 3
    errs = []
    for num in (51, 101, 201):
        c = Chart.radial(3, num)
        exact = np.sin(0.5 * np.pi * c.s)
        src = ScalarField(c, -(np.pi ** 2 / 4.0) * c.s ** 4 * exact)
        p = flat_problem(c, DirichletBC(BoundaryField.constant(c, 1.0)),
                         src=src)
        u = solve_linear(p).solution.values
        errs.append(np.max(np.abs(u - exact)))
    assert errs[0] / errs[1] > 3.2
    assert errs[1] / errs[2] > 3.2


def test_convergence_flag_implies_tolerance():
    c = Chart.radial(3, 101)
    p = flat_problem(c, DirichletBC(BoundaryField.constant(c, 1.0)))
    res = solve_linear(p, tol=1e-12)
    assert res.converged and res.residual <= 1e-12


def test_nonconvergence_has_history():
    c = Chart.radial(3, 401)
    p = flat_problem(c, DirichletBC(BoundaryField.constant(c, 1.0)))
    with pytest.raises(NonConvergenceError) as exc:
        solve_linear(p, tol=1e-30)
    assert isinstance(exc.value.history, list)


def test_chart_mismatch_rejected():
    c1 = Chart.radial(3, 51)
    c2 = Chart.radial(3, 61)
    g = flat_metric(c1)
    with pytest.raises(ChartError):
        LinearProblem(metric=g, a=1.0, c=constant_field(c2, 0.0),
                      src=constant_field(c1, 0.0),
                      bc=DirichletBC(BoundaryField.constant(c1, 1.0)),
                      limit=0.0)


def test_triplet_dump_roundtrip(tmp_path):
    c = Chart.radial(3, 21)
    p = flat_problem(c, DirichletBC(BoundaryField.constant(c, 1.0)))
    system = assemble(p)
    path = tmp_path / "system.txt"
    system.dump_triplets(path)
    lines = path.read_text().strip().splitlines()
    nrows, ncols, nnz = (int(t) for t in lines[0].split())
    assert (nrows, ncols) == (21, 21)
    entries = [ln.split() for ln in lines[1:1 + nnz]]
    A = np.zeros((nrows, ncols))
    for i, j, v in entries:
        A[int(i), int(j)] += float(v)
    dense = system.matrix.toarray()
    assert np.allclose(A, dense, rtol=0, atol=0)
    rhs_lines = [ln.split() for ln in lines[1 + nnz:]]
    rhs = np.array([float(v) for _, _, v in rhs_lines])
    assert np.array_equal(rhs, system.rhs)


def test_exact_limit_row():
    # the s=0 row is the exact identity u = limit
    c = Chart.radial(3, 41)
    p = flat_problem(c, DirichletBC(BoundaryField.constant(c, 3.0)), limit=2.0)
    u = solve_linear(p).solution.values
    assert u[0] == pytest.approx(2.0, abs=1e-12)
    assert u[-1] == pytest.approx(3.0, abs=1e-12)
