"""Rayleigh-quotient estimates of the conformally invariant Sobolev quotient.

Only upper bounds are certified: the reported value is the minimum of the
quotient over a finite trial family, which can only overestimate the true
infimum.  A positive upper bound is supporting evidence for positivity, not
a proof; a nonpositive value disproves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .chart import RADIAL, Chart, ScalarField
from .errors import ChartError, ScalarFlatError
from .metrics import MetricField, scalar_curvature


@dataclass(frozen=True)
class TrialFamily:
    """Radial bump trials with smooth compact support.

    Profiles are Gaussian bumps of given center/width multiplied by a C^1
    smoothstep cutoff that vanishes at r <= r_in and r >= r_out, keeping the
    support inside the open manifold (away from r=1 and infinity).
    """

    centers: tuple
    widths: tuple
    r_in: float = 1.5
    r_out: float = 20.0
    cutoff_width: float = 0.5

    def __post_init__(self):
        if self.r_in <= 1.0 or self.r_out <= self.r_in:
            raise ScalarFlatError("need 1 < r_in < r_out")
        if not self.centers or not self.widths:
            raise ScalarFlatError("empty trial family")

    def parameters(self):
        return [(c, w) for c in self.centers for w in self.widths]

    def evaluate(self, chart: Chart, center: float, width: float) -> ScalarField:
        return ScalarField(chart, self.profile(chart.r, center, width))

    def profile(self, r, center, width):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        fin = np.isfinite(r)
        out[fin] = np.exp(-((r[fin] - center) / width) ** 2)
        return out * self.cutoff(r)

    def cutoff(self, r):
        r = np.asarray(r, dtype=float)
        lo = _smoothstep((r - self.r_in) / self.cutoff_width)
        hi = _smoothstep((self.r_out - r) / self.cutoff_width)
        out = np.where(np.isfinite(r), lo * hi, 0.0)
        return out


def _smoothstep(t):
    # C^2 smootherstep, keeps the integrands twice differentiable
    t = np.clip(np.where(np.isfinite(t), t, 1.0), 0.0, 1.0)
    return t ** 3 * (t * (6.0 * t - 15.0) + 10.0)


def yamabe_energy_density(g: MetricField, f: ScalarField, order: int = 4):
    """Pointwise |grad f|^2_g + (n-2)/(4(n-1)) R f^2 and measure factor."""
    chart = g.chart
    n = chart.n
    if chart.mode != RADIAL:
        order = 2
    R = scalar_curvature(g, order=order).values
    cn = (n - 2.0) / (4.0 * (n - 1.0))

    if chart.mode == RADIAL:
        fr = chart.d_dr(f.values, order=order)
        grad2 = fr ** 2 / g.comps[..., 0]
        measure = (np.sqrt(g.comps[..., 0])
                   * g.comps[..., 1] ** ((n - 1) / 2.0))
    else:
        fr = chart.d_dr(f.values, order=2)
        ft = chart.d_dtheta(f.values)
        s = chart.s[:, None]
        grad2 = (fr ** 2 / g.comps[..., 0]
                 + (s * ft) ** 2 / g.comps[..., 1])
        measure = np.sqrt(np.prod(g.comps, axis=-1))
    dens = grad2 + cn * R * f.values ** 2
    return dens, measure


def rayleigh_quotient(g: MetricField, f: ScalarField, order: int = 4) -> float:
    """Yamabe-functional quotient of a compactly supported trial.

    numerator = int |grad f|^2_g + (n-2)/(4(n-1)) R f^2 dmu_g;
    denominator = ||f||^2 in L^{2n/(n-2)}(dmu_g).
    """
    chart = g.chart
    n = chart.n
    if f.chart != chart:
        raise ChartError("trial must live on the metric's chart")
    vals = f.values
    if float(np.max(np.abs(vals))) == 0.0:
        raise ScalarFlatError("zero trial: quotient undefined")
    if abs(vals[-1] if chart.mode == RADIAL else np.max(np.abs(vals[-1]))) > 0 \
            or abs(vals[0] if chart.mode == RADIAL
                   else np.max(np.abs(vals[0]))) > 0:
        raise ScalarFlatError("trial must vanish at r=1 and at infinity")

    dens, measure = yamabe_energy_density(g, f, order=order)
    p_crit = 2.0 * n / (n - 2.0)
    num = _flat_weighted_integral(chart, dens * measure)
    den = _flat_weighted_integral(chart, np.abs(vals) ** p_crit * measure)
    return num / den ** (2.0 / p_crit)


def _flat_weighted_integral(chart: Chart, integrand):
    """Integral against the flat measure, Simpson in s for radial charts.

    The integrand must vanish near s=0 (compact support), so the s^{-(n+1)}
    Jacobian never meets a nonzero value at infinity.
    """
    s = chart.s if chart.mode == RADIAL else chart.s[:, None]
    with np.errstate(divide="ignore"):
        jac = np.where(s > 0, np.where(s > 0, s, 1.0) ** (-(chart.n + 1.0)),
                       0.0)
    gvals = integrand * jac
    if chart.mode == RADIAL:
        from .chart import sphere_area
        return sphere_area(chart.n) * float(simpson(gvals, x=chart.s))
    tint = simpson(gvals * np.sin(chart.theta)[None, :], x=chart.theta,
                   axis=1)
    return 2.0 * math.pi * float(simpson(tint, x=chart.s))


def estimate_sobolev_quotient(g: MetricField, family: TrialFamily,
                              budget: int = 100):
    """Minimum quotient over the family within an evaluation budget.

    Deterministic: parameters are scanned in declaration order and ties go
    to the lowest index.  Returns (Q_upper, (center, width), positivity
    evidence flag).
    """
    if budget <= 0:
        raise ScalarFlatError("budget must be positive")
    best = None
    best_params = None
    for k, (c, w) in enumerate(family.parameters()):
        if k >= budget:
            break
        trial = family.evaluate(g.chart, c, w)
        q = rayleigh_quotient(g, trial)
        if best is None or q < best:
            best, best_params = q, (c, w)
    return best, best_params, best > 0.0
