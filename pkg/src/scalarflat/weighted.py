"""Discrete weighted Lebesgue/Sobolev norms and asymptotic-decay estimation.

Norms use the flat background measure and flat derivatives throughout.  The
essential supremum is a nodal max; the s=0 node (r = infinity) is excluded
from both sup and integral evaluations, where it carries zero quadrature
weight anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chart import RADIAL, Chart, ScalarField
from .errors import ChartError, InvalidNormSpec


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weighted norm parameters: L^p with decay weight delta, k derivatives."""

    p: float
    delta: float
    k: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise InvalidNormSpec(f"p must be >= 1, got {self.p}")
        if int(self.k) != self.k or self.k < 0:
            raise InvalidNormSpec(f"k must be an integer >= 0, got {self.k}")

    @classmethod
    def parse(cls, text: str) -> "WeightedNormSpec":
        """Parse "L(p,delta)" or "W(k,p,delta)"; p may be "inf"."""
        text = text.strip()
        try:
            head, body = text.split("(", 1)
            args = [t.strip() for t in body.rstrip(")").split(",")]
            if head == "L":
                p, delta = args
                return cls(p=float(p), delta=float(delta))
            if head == "W":
                k, p, delta = args
                return cls(p=float(p), delta=float(delta), k=int(k))
        except (ValueError, IndexError):
            pass
        raise InvalidNormSpec(f"cannot parse norm spec {text!r}")

    def __str__(self):
        if self.k == 0:
            return f"L({self.p:g},{self.delta:g})"
        return f"W({self.k},{self.p:g},{self.delta:g})"


def _derivative_magnitudes(u: ScalarField, k: int):
    """Flat-frame magnitudes |grad^j u| for j = 0..k (k <= 2)."""
    c = u.chart
    out = [np.abs(u.values)]
    if k == 0:
        return out
    ur = c.d_dr(u.values)
    if c.mode == RADIAL:
        grad = np.abs(ur)
    else:
        with np.errstate(divide="ignore"):
            inv_r = np.where(c.s > 0, c.s, 0.0)[:, None]
        ut = c.d_dtheta(u.values)
        grad = np.sqrt(ur ** 2 + (inv_r * ut) ** 2)
    out.append(grad)
    if k == 1:
        return out
    if k > 2 or c.mode != RADIAL:
        raise InvalidNormSpec(
            "derivative order limited to k<=2 (radial) and k<=1 (axisym)")
    # radial Hessian magnitude: sqrt(u_rr^2 + (n-1)(u_r/r)^2)
    urr = c.d_dr(ur)
    with np.errstate(divide="ignore"):
        inv_r = np.where(c.s > 0, c.s, 0.0)
    out.append(np.sqrt(urr ** 2 + (c.n - 1) * (inv_r * ur) ** 2))
    return out


def _lp_weighted(chart: Chart, mag: np.ndarray, p: float, delta: float):
    s = chart.s if chart.mode == RADIAL else chart.s[:, None]
    rpow = np.where(s > 0, np.where(s > 0, s, 1.0) ** delta, 0.0)  # r^{-delta}
    if math.isinf(p):
        vals = (rpow * mag)
        if chart.mode == RADIAL:
            return float(np.max(vals[1:]))
        return float(np.max(vals[1:, :]))
    w = chart.weights
    integrand = mag ** p * np.where(
        s > 0, np.where(s > 0, s, 1.0) ** (delta * p + chart.n), 0.0)
    return float(np.sum(w * integrand) ** (1.0 / p))


def weighted_norm(u: ScalarField, spec: WeightedNormSpec) -> float:
    """Discrete weighted Sobolev norm of u against the flat measure.

    k = 0 gives the weighted L^p norm; k > 0 sums the shifted-weight norms
    of the flat derivative magnitudes.
    """
    mags = _derivative_magnitudes(u, spec.k)
    total = 0.0
    for j, mag in enumerate(mags):
        total += _lp_weighted(u.chart, mag, spec.p, spec.delta - j)
    return total


@dataclass
class DecayFit:
    """Far-field fit u ~ u_inf + a r^{-q}.

    ``status`` is "ok", "constant" (a = 0 branch) or "no-decay" (q <= 0).
    """

    u_inf: float
    a: float
    q: float
    residual: float
    status: str = "ok"


def decay_fit(u: ScalarField, s_max: float = 0.2,
              constant_tol: float = 1e-12) -> DecayFit:
    """Least-squares decay-rate fit over the far region s in (0, s_max].

    The limit u_inf is taken from the exact s=0 node; the rate comes from a
    linear least-squares fit of log|u - u_inf| against
    [1, log s, s, s^2], whose polynomial terms absorb the next-order tail
    corrections and debias the exponent.  The residual is relative to the
    field scale on the window.
    """
    c = u.chart
    if c.mode != RADIAL:
        raise ChartError("decay_fit requires a radial chart")
    mask = (c.s > 0) & (c.s <= s_max)
    if mask.sum() < 8:
        raise ChartError("need at least 8 nodes in the far region s <= "
                         f"{s_max}")
    s = c.s[mask]
    v = u.values[mask]
    u_inf = float(u.values[0])  # exact nodal limit at s = 0

    dev = v - u_inf
    scale = max(np.max(np.abs(v)), 1.0)
    if np.max(np.abs(dev)) <= constant_tol * scale:
        return DecayFit(u_inf=u_inf, a=0.0, q=math.inf, residual=0.0,
                        status="constant")

    sign = 1.0 if np.median(dev) >= 0 else -1.0
    good = sign * dev > 0
    if good.sum() < 4:
        return DecayFit(u_inf=u_inf, a=0.0, q=0.0, residual=1.0,
                        status="no-decay")
    sg, dg = s[good], sign * dev[good]
    # rate sign from the pure log-linear model first: the polynomial
    # debiasing columns below can mask growth
    A0 = np.stack([np.ones_like(sg), np.log(sg)], axis=1)
    coef0, *_ = np.linalg.lstsq(A0, np.log(dg), rcond=None)
    if coef0[1] <= 0:
        return DecayFit(u_inf=u_inf, a=sign * math.exp(coef0[0]),
                        q=float(coef0[1]), residual=1.0, status="no-decay")
    A = np.stack([np.ones_like(sg), np.log(sg), sg, sg ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(dg), rcond=None)
    a = sign * math.exp(coef[0])
    q = float(coef[1])
    model = u_inf + sign * np.exp(A @ coef)
    resid = float(np.sqrt(np.mean((model - v[good]) ** 2))
                  / max(np.max(np.abs(v)), 1e-300))
    if q <= 0:
        return DecayFit(u_inf=u_inf, a=a, q=q, residual=resid,
                        status="no-decay")
    return DecayFit(u_inf=u_inf, a=a, q=q, residual=resid, status="ok")


def mass_coefficient(phi: ScalarField, s_max: float = 0.3) -> float:
    """ADM-type coefficient m in phi ~ 1 + m/(2 r^{n-2}) at infinity.

    Fits phi - 1 to a three-term expansion c1 s^{n-2} + c2 s^{n-1} + c3 s^n
    over the far window and returns m = 2 c1; the higher terms absorb the
    curvature of the tail so the leading coefficient is unbiased to high
    order in the window size.
    """
    c = phi.chart
    if c.mode != RADIAL:
        raise ChartError("mass_coefficient requires a radial chart")
    mask = (c.s > 0) & (c.s <= s_max)
    s = c.s[mask]
    dev = phi.values[mask] - 1.0
    k = c.n - 2
    A = np.stack([s ** k, s ** (k + 1), s ** (k + 2)], axis=1)
    coef, *_ = np.linalg.lstsq(A, dev, rcond=None)
    return 2.0 * float(coef[0])
