"""Assembly and solution of linear elliptic problems on the chart.

Problems have the form  a * Delta_g u + c * u = src  with one inner-boundary
condition at r=1 (Dirichlet value or Robin du/deta + gamma u = h) and an
exact limit row u = L at s=0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chart import RADIAL, BoundaryField, Chart, ScalarField
from .errors import (ChartError, DiscreteIsomorphismError, NonConvergenceError,
                     SolveError)
from .metrics import MetricField, build_laplace_matrix


@dataclass(frozen=True)
class DirichletBC:
    """u = value on the r=1 slice."""

    value: BoundaryField


@dataclass(frozen=True)
class RobinBC:
    """du/deta + gamma * u = h on the r=1 slice, eta away from infinity."""

    gamma: BoundaryField
    h: BoundaryField


@dataclass
class LinearProblem:
    """a * Delta_g u + c * u = src, with inner BC and limit L at infinity."""

    metric: MetricField
    a: float
    c: ScalarField
    src: ScalarField
    bc: DirichletBC | RobinBC
    limit: float

    def __post_init__(self):
        chart = self.metric.chart
        for f in (self.c, self.src):
            if f.chart != chart:
                raise ChartError("coefficient fields must share the metric's "
                                 "chart")
        bfs = ((self.bc.value,) if isinstance(self.bc, DirichletBC)
               else (self.bc.gamma, self.bc.h))
        for f in bfs:
            if f.chart != chart:
                raise ChartError("boundary fields must share the metric's "
                                 "chart")


@dataclass
class LinearSystem:
    """Assembled sparse system with bookkeeping for the residual check."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    chart: Chart

    def dump_triplets(self, path):
        """Write the system in a plain triplet text format.

        Line 1: ``nrows ncols nnz``; then one ``i j value`` line per entry;
        then one ``rhs i value`` line per right-hand-side entry.
        """
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v:.17g}\n")
            for i, v in enumerate(self.rhs):
                fh.write(f"rhs {i} {v:.17g}\n")


@dataclass
class LinearSolveResult:
    solution: ScalarField
    residual: float
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)


def assemble(problem: LinearProblem) -> LinearSystem:
    """Build the sparse system.

    Interior rows: conservative second-order stencil for a*Delta_g plus the
    diagonal c term.  s=0: exact row u = limit.  r=1: Dirichlet row or Robin
    row with a second-order one-sided normal derivative.
    """
    g = problem.metric
    chart = g.chart
    ns = chart.s.size
    nt = 1 if chart.mode == RADIAL else chart.theta.size
    N = ns * nt
    h = chart.ds

    L = build_laplace_matrix(g).tolil()
    A = (problem.a * L).tolil()
    A.setdiag(A.diagonal() + problem.c.values.ravel())
    rhs = problem.src.values.ravel().copy()

    def rows_at(i):
        return range(i * nt, (i + 1) * nt) if chart.mode != RADIAL \
            else [i] if nt == 1 else range(i * nt, (i + 1) * nt)

    # exact limit row at s=0
    for k in rows_at(0):
        A.rows[k] = [k]
        A.data[k] = [1.0]
        rhs[k] = problem.limit

    # inner boundary rows at s=1
    i_last = ns - 1
    sqrt_arr = np.sqrt(g.boundary_a_rr())
    if isinstance(problem.bc, DirichletBC):
        vals = np.atleast_1d(problem.bc.value.values)
        for j, k in enumerate(rows_at(i_last)):
            A.rows[k] = [k]
            A.data[k] = [1.0]
            rhs[k] = vals[j if vals.size > 1 else 0]
    else:
        gam = np.atleast_1d(problem.bc.gamma.values)
        hv = np.atleast_1d(problem.bc.h.values)
        # du/deta = (1/sqrt g_rr) * (3u_N - 4u_{N-1} + u_{N-2}) / (2h)
        for j, k in enumerate(rows_at(i_last)):
            inv = 1.0 / (sqrt_arr[j if sqrt_arr.size > 1 else 0])
            cols = [k - 2 * nt, k - nt, k]
            coefs = [inv * 1.0 / (2 * h), inv * -4.0 / (2 * h),
                     inv * 3.0 / (2 * h) + gam[j if gam.size > 1 else 0]]
            A.rows[k] = cols
            A.data[k] = coefs
            rhs[k] = hv[j if hv.size > 1 else 0]

    return LinearSystem(matrix=A.tocsr(), rhs=rhs, chart=chart)


def solve_linear(problem: LinearProblem, tol: float = 1e-10,
                 max_iter: int = 500) -> LinearSolveResult:
    """Solve the assembled system with an ILU-preconditioned Krylov method.

    The tolerance is a relative algebraic residual on the row-equilibrated
    system.  Deterministic for fixed inputs.
    """
    system = assemble(problem)
    return solve_system(system, tol=tol, max_iter=max_iter)


def solve_system(system: LinearSystem, tol: float = 1e-10,
                 max_iter: int = 500) -> LinearSolveResult:
    A = system.matrix
    b = system.rhs

    # row equilibration: the compactified operator rows vary over many
    # orders of magnitude in scale, which ruins both ILU and the residual
    # normalization
    scale = np.abs(A).max(axis=1).toarray().ravel()
    if np.any(scale == 0.0):
        raise DiscreteIsomorphismError("discrete isomorphism failure: "
                                       "zero matrix row")
    D = sp.diags(1.0 / scale)
    Aeq = (D @ A).tocsc()
    beq = b / scale

    try:
        ilu = spla.spilu(Aeq, drop_tol=1e-12, fill_factor=60)
    except RuntimeError as exc:
        raise DiscreteIsomorphismError(
            f"discrete isomorphism failure: {exc}") from exc

    M = spla.LinearOperator(Aeq.shape, ilu.solve)
    bnorm = np.linalg.norm(beq)
    anorm = spla.norm(Aeq, np.inf)
    history = []

    def backward_error(xk):
        # normwise backward error: attainable down to machine precision even
        # when ||x|| >> ||b|| (the relative-to-b residual is not)
        denom = anorm * np.linalg.norm(xk) + bnorm
        return float(np.linalg.norm(Aeq @ xk - beq) / max(denom, 1e-300))

    def cb(xk):
        history.append(backward_error(xk))

    x, info = spla.lgmres(Aeq, beq, M=M, rtol=tol * 1e-2 if bnorm else 0.0,
                          atol=tol * 1e-2 * max(bnorm, 1e-300),
                          maxiter=max_iter, callback=cb)
    resid = backward_error(x)
    # info > 0 only flags the iteration cap; what matters is the achieved
    # residual
    if np.isfinite(resid) and resid > tol and info >= 0:
        # iterative stall: fall back to a direct factorization
        try:
            xd = spla.splu(Aeq).solve(beq)
        except RuntimeError:
            xd = None
        if xd is not None:
            rd = backward_error(xd)
            if rd < resid:
                x, resid = xd, rd
                history.append(rd)
    if not np.isfinite(resid) or resid > tol or info < 0:
        raise NonConvergenceError(
            f"linear solve did not reach tol={tol:g} (residual {resid:.3g}, "
            f"info={info})", history=history)
    if not np.all(np.isfinite(x)):
        raise DiscreteIsomorphismError("discrete isomorphism failure: "
                                       "non-finite solution")
    sol = ScalarField(system.chart, x.reshape(system.chart.shape))
    return LinearSolveResult(solution=sol, residual=resid,
                             iterations=len(history), converged=True,
                             residual_history=history)


def constant_field(chart: Chart, value: float) -> ScalarField:
    return ScalarField(chart, np.full(chart.shape, float(value)))
