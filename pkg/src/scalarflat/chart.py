"""Discretized exterior domain and nodal field containers.

The exterior region {r >= 1} is compactified through s = 1/r, so the grid
lives on s in [0, 1]: s = 0 is spatial infinity, s = 1 is the inner boundary
r = 1.  Decay conditions at infinity become exact boundary conditions at
s = 0.  Two modes are supported: purely radial (any dimension n >= 3) and
axisymmetric 2D in (s, theta) for n = 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartError

RADIAL = "radial-1D"
AXISYM = "axisymmetric-2D"


def sphere_area(n: int) -> float:
    """Surface area of the unit (n-1)-sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


class Chart:
    """Tensor grid on the compactified exterior domain.

    Parameters
    ----------
    n : int
        Ambient dimension, n >= 3.
    s_nodes : array_like
        Strictly increasing nodes on [0, 1] with s_nodes[0] == 0 and
        s_nodes[-1] == 1.
    theta_nodes : array_like, optional
        Polar-angle nodes on [0, pi].  Presence selects axisymmetric mode,
        which is only supported for n == 3.
    """

    def __init__(self, n, s_nodes, theta_nodes=None):
        if int(n) != n or n < 3:
            raise ChartError(f"dimension must be an integer >= 3, got {n}")
        self.n = int(n)
        s = np.asarray(s_nodes, dtype=float)
        if s.ndim != 1 or s.size < 3:
            raise ChartError("s_nodes must be a 1D array with at least 3 nodes")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise ChartError("s_nodes must start at 0 (infinity) and end at 1 (r=1)")
        if not np.all(np.diff(s) > 0):
            raise ChartError("s_nodes must be strictly increasing")
        self.s = s
        self.s.flags.writeable = False

        if theta_nodes is None:
            self.mode = RADIAL
            self.theta = None
        else:
            if self.n != 3:
                raise ChartError("axisymmetric mode is only supported for n=3")
            th = np.asarray(theta_nodes, dtype=float)
            if th.ndim != 1 or th.size < 3:
                raise ChartError("theta_nodes must be a 1D array with at least 3 nodes")
            if not (th[0] == 0.0 and abs(th[-1] - math.pi) < 1e-14):
                raise ChartError("theta_nodes must span [0, pi]")
            if not np.all(np.diff(th) > 0):
                raise ChartError("theta_nodes must be strictly increasing")
            self.mode = AXISYM
            self.theta = th
            self.theta.flags.writeable = False

        with np.errstate(divide="ignore"):
            r = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), np.inf)
        self.r = r
        self.r.flags.writeable = False
        self._weights = None

    # -- basic structure ---------------------------------------------------

    @classmethod
    def radial(cls, n: int, num_s: int) -> "Chart":
        """Uniform radial chart with ``num_s`` nodes in s."""
        return cls(n, np.linspace(0.0, 1.0, num_s))

    @classmethod
    def axisymmetric(cls, num_s: int, num_theta: int, n: int = 3) -> "Chart":
        """Uniform axisymmetric chart (n=3 only)."""
        return cls(n, np.linspace(0.0, 1.0, num_s),
                   np.linspace(0.0, math.pi, num_theta))

    @property
    def shape(self):
        if self.mode == RADIAL:
            return (self.s.size,)
        return (self.s.size, self.theta.size)

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def boundary_shape(self):
        """Shape of the r=1 boundary slice (last s index)."""
        return (1,) if self.mode == RADIAL else (self.theta.size,)

    @property
    def ds(self) -> float:
        """Grid spacing in s; requires a uniform grid."""
        d = np.diff(self.s)
        if not np.allclose(d, d[0], rtol=1e-12, atol=1e-15):
            raise ChartError("operation requires a uniform s grid")
        return float(d[0])

    @property
    def dtheta(self) -> float:
        d = np.diff(self.theta)
        if not np.allclose(d, d[0], rtol=1e-12, atol=1e-15):
            raise ChartError("operation requires a uniform theta grid")
        return float(d[0])

    def __eq__(self, other):
        return (isinstance(other, Chart) and self.n == other.n
                and self.mode == other.mode
                and np.array_equal(self.s, other.s)
                and (self.theta is None and other.theta is None
                     or (self.theta is not None and other.theta is not None
                         and np.array_equal(self.theta, other.theta))))

    def __hash__(self):
        return hash((self.n, self.mode, self.s.tobytes(),
                     None if self.theta is None else self.theta.tobytes()))

    # -- quadrature --------------------------------------------------------

    @property
    def weights(self) -> np.ndarray:
        """Flat-measure quadrature weights per node.

        sum(w * f) approximates the integral of f over {r >= 1} against the
        Euclidean measure.  The s=0 node has weight 0: its panel contribution
        is recovered through the trapezoid endpoint at the first interior
        node, which is exact in the limit for integrable (decaying) fields.
        """
        if self._weights is None:
            sw = _trapezoid_weights(self.s)
            with np.errstate(divide="ignore"):
                jac = np.where(self.s > 0,
                               np.where(self.s > 0, self.s, 1.0)
                               ** (-(self.n + 1.0)), 0.0)
            wr = sw * jac
            wr[0] = 0.0
            if self.mode == RADIAL:
                w = sphere_area(self.n) * wr
            else:
                tw = _trapezoid_weights(self.theta) * np.sin(self.theta)
                w = 2.0 * math.pi * np.outer(wr, tw)
            w.flags.writeable = False
            self._weights = w
        return self._weights

    def flat_integral(self, values, r_min=None, r_max=None) -> float:
        """Integrate nodal values over {r_min <= r <= r_max}, flat measure.

        Region edges falling between nodes are handled by clipping the
        trapezoid panels, so indicator-type regions keep quadrature order.
        """
        v = np.asarray(values, dtype=float)
        if v.shape != self.shape:
            raise ChartError("values shape does not match chart")
        s_lo = 0.0 if r_max is None else 1.0 / r_max
        s_hi = 1.0 if r_min is None else 1.0 / r_min

        if self.mode == RADIAL:
            radial_profile = v
        else:
            tw = _trapezoid_weights(self.theta) * np.sin(self.theta)
            radial_profile = 2.0 * math.pi * v @ tw

        s = self.s
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(s > 0, radial_profile * s ** (-(self.n + 1.0)), 0.0)
        g = np.nan_to_num(g)
        g[0] = 0.0
        total = 0.0
        for i in range(s.size - 1):
            a, b = s[i], s[i + 1]
            lo, hi = max(a, s_lo), min(b, s_hi)
            if hi <= lo:
                continue
            ga = g[i] + (g[i + 1] - g[i]) * (lo - a) / (b - a)
            gb = g[i] + (g[i + 1] - g[i]) * (hi - a) / (b - a)
            total += 0.5 * (ga + gb) * (hi - lo)
        if self.mode == RADIAL:
            total *= sphere_area(self.n)
        return total

    # -- finite differences (background flat derivatives) ------------------

    def d_ds(self, values, order: int = 2) -> np.ndarray:
        """d/ds on the uniform grid, second or fourth order accurate."""
        v = np.asarray(values, dtype=float)
        h = self.ds
        if order == 2:
            return np.gradient(v, h, axis=0, edge_order=2)
        if order != 4:
            raise ChartError("order must be 2 or 4")
        out = np.empty_like(v)
        out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
        # one-sided 4th-order stencils at the edges
        c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        for k in (0, 1):
            out[k] = np.tensordot(c, v[k:k + 5], axes=(0, 0)) / h
        for k in (-1, -2):
            out[k] = -np.tensordot(c, v[k:k - 5:-1], axes=(0, 0)) / h
        return out

    def d_dtheta(self, values, even_at_poles: bool = True) -> np.ndarray:
        """d/dtheta with ghost reflection at theta = 0, pi for regularity."""
        v = np.asarray(values, dtype=float)
        h = self.dtheta
        out = np.empty_like(v)
        out[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * h)
        if even_at_poles:
            out[:, 0] = 0.0
            out[:, -1] = 0.0
        else:
            out[:, 0] = (-3 * v[:, 0] + 4 * v[:, 1] - v[:, 2]) / (2 * h)
            out[:, -1] = (3 * v[:, -1] - 4 * v[:, -2] + v[:, -3]) / (2 * h)
        return out

    def d_dr(self, values, order: int = 2) -> np.ndarray:
        """Radial derivative d/dr = -s^2 d/ds; zero at the s=0 node."""
        ds = self.d_ds(values, order=order)
        s = self.s if self.mode == RADIAL else self.s[:, None]
        return -(s ** 2) * ds


@dataclass
class ScalarField:
    """Nodal scalar data on a chart.

    ``delta`` optionally declares the decay weight (u = o(r^delta)).
    """

    chart: Chart
    values: np.ndarray
    delta: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.chart.shape:
            raise ChartError(
                f"field shape {self.values.shape} does not match chart "
                f"{self.chart.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ChartError("field values must be finite")

    @classmethod
    def from_function(cls, chart: Chart, fn, delta=None) -> "ScalarField":
        """Sample fn(r) (radial) or fn(r, theta) (axisym) at the nodes.

        The s=0 node is sampled at r = inf; fn must return the finite limit.
        """
        if chart.mode == RADIAL:
            vals = np.array([fn(ri) for ri in chart.r], dtype=float)
        else:
            vals = np.array([[fn(ri, tj) for tj in chart.theta]
                             for ri in chart.r], dtype=float)
        return cls(chart, vals, delta=delta)

    def boundary_values(self) -> np.ndarray:
        v = self.values[-1]
        return np.atleast_1d(v)


@dataclass
class BoundaryField:
    """Nodal scalar data on the r=1 boundary slice."""

    chart: Chart
    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.values.shape != self.chart.boundary_shape:
            raise ChartError(
                f"boundary field shape {self.values.shape} does not match "
                f"boundary slice {self.chart.boundary_shape}")
        if not np.all(np.isfinite(self.values)):
            raise ChartError("boundary field values must be finite")

    @classmethod
    def constant(cls, chart: Chart, value: float) -> "BoundaryField":
        return cls(chart, np.full(chart.boundary_shape, float(value)))
