"""Metrics on the exterior domain and their differential geometry.

Metric components are stored in the orthonormal frame of the flat background
(e_r, e_theta/r, e_phi/(r sin theta)), so the flat metric is the identity and
asymptotic flatness reads "components - identity decay to zero".

Conventions
-----------
* The boundary unit normal eta points away from infinity (eta = -e_r up to
  normalization), so the flat unit sphere in R^n has mean curvature -(n-1).
* Mean curvature is the *sum* of principal curvatures (trace of the shape
  operator).  With that normalization the conformal transformation law for
  g~ = u^{4/(n-2)} g reads

      H~ = u^{-n/(n-2)} ( (2(n-1)/(n-2)) du/deta + H u ).

  The same law with coefficient 2/(n-2) holds for the *averaged* mean
  curvature; mixing the two conventions is a classic source of sign/factor
  bugs, see docs/conventions in the README.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import AXISYM, RADIAL, BoundaryField, Chart, ScalarField
from .errors import ChartError, MetricError, PositivityError

#: decay weight for asymptotic flatness: components of g - flat are o(r^{5/2-n})
FLATNESS_DECAY = lambda n: 2.5 - n  # noqa: E731


def conformal_law_coefficient(n: int) -> float:
    """Coefficient of du/deta in the sum-convention mean-curvature law."""
    return 2.0 * (n - 1.0) / (n - 2.0)


class MetricField:
    """Symmetric 2-tensor on a chart, diagonal in the orthonormal frame.

    Radial mode stores (a_rr, a_tan) per node (all tangential directions
    equal); axisymmetric mode stores (a_rr, a_theta, a_phi) per node.
    """

    def __init__(self, chart: Chart, comps: np.ndarray,
                 is_conformally_flat: bool = False, u0: np.ndarray = None,
                 u0_coeffs=None):
        self.chart = chart
        comps = np.asarray(comps, dtype=float)
        expected = chart.shape + ((2,) if chart.mode == RADIAL else (3,))
        if comps.shape != expected:
            raise MetricError(
                f"component array shape {comps.shape}, expected {expected}")
        if not np.all(np.isfinite(comps)):
            raise MetricError("metric components must be finite")
        if np.any(comps <= 0.0):
            raise MetricError(
                "metric not positive definite: nonpositive frame component "
                f"(min {comps.min():.3g})")
        self.comps = comps
        self.comps.flags.writeable = False
        self.is_conformally_flat = bool(is_conformally_flat)
        if self.is_conformally_flat:
            if u0 is None:
                raise MetricError("conformally flat metric requires u0")
            self.u0 = np.asarray(u0, dtype=float)
            if self.u0.shape != chart.shape:
                raise MetricError("u0 shape does not match chart")
        else:
            self.u0 = None
        self.u0_coeffs = None if u0_coeffs is None else tuple(
            float(c) for c in u0_coeffs)
        # set by conformal_transform on non-conformally-flat bases; lets
        # scalar_curvature use the exact conformal identity
        self.conformal_base = None
        self.conformal_phi = None

    # component accessors broadcast against chart shape
    @property
    def a_rr(self):
        return self.comps[..., 0]

    @property
    def a_tan(self):
        """Tangential components; (..., d-1) wide view for axisym."""
        return self.comps[..., 1:]

    def sqrt_det_radial(self) -> np.ndarray:
        """sqrt(det g) in r-coordinates, without the angular flat factor.

        Radial mode: sqrt(A) * B^{(n-1)/2} * r^{n-1}.  Axisym mode includes
        sin(theta): sqrt(a_rr a_th a_ph) * r^2 * sin(theta).  The r factors
        are expressed through s (r = 1/s); the value at s = 0 is +inf and
        callers must not use that row.
        """
        c = self.chart
        with np.errstate(divide="ignore"):
            rf = np.where(c.s > 0, np.where(c.s > 0, c.s, 1.0)
                          ** (1.0 - c.n), np.inf)
        if c.mode == RADIAL:
            return (np.sqrt(self.comps[..., 0])
                    * self.comps[..., 1] ** ((c.n - 1) / 2.0) * rf)
        prod = np.sqrt(np.prod(self.comps, axis=-1))
        with np.errstate(invalid="ignore"):
            # inf * sin(0) = nan at the pole corners of the s=0 row; that
            # row is never used, keep it at +inf for safety
            out = prod * rf[:, None] * np.sin(c.theta)[None, :]
        out[0, :] = np.inf
        return out

    def boundary_a_rr(self) -> np.ndarray:
        return np.atleast_1d(self.comps[-1, ..., 0])


def flat_metric(chart: Chart) -> MetricField:
    """The Euclidean metric on the chart."""
    d = 2 if chart.mode == RADIAL else 3
    comps = np.ones(chart.shape + (d,))
    return MetricField(chart, comps, is_conformally_flat=True,
                       u0=np.ones(chart.shape), u0_coeffs=(1.0,))


def conformal_factor_from_coeffs(chart: Chart, coeffs) -> np.ndarray:
    """Evaluate u0 = sum_k c_k r^{-k} = sum_k c_k s^k at the nodes."""
    coeffs = [float(c) for c in coeffs]
    s = chart.s if chart.mode == RADIAL else chart.s[:, None]
    u0 = np.zeros(chart.shape)
    for k, c in enumerate(coeffs):
        u0 = u0 + c * s ** k
    return u0


def conformal_metric(chart: Chart, u0, u0_coeffs=None) -> MetricField:
    """g = u0^{4/(n-2)} * flat, from nodal u0 values."""
    u0 = np.asarray(u0, dtype=float)
    if np.any(u0 <= 0.0):
        raise MetricError(
            "conformal factor u0 must be positive everywhere "
            f"(min {u0.min():.3g})")
    n = chart.n
    fac = u0 ** (4.0 / (n - 2.0))
    d = 2 if chart.mode == RADIAL else 3
    comps = np.repeat(fac[..., None], d, axis=-1)
    return MetricField(chart, comps, is_conformally_flat=True, u0=u0,
                       u0_coeffs=u0_coeffs)


def metric_from_spec(spec, chart: Chart, decay_tol: float = 0.25) -> MetricField:
    """Instantiate a metric from a specification.

    Accepted forms:

    * ``"flat"``
    * ``"conformal:c0,c1,..."`` or ``{"kind": "conformal", "coeffs": [...]}``
      with u0 = c0 + c1/r + c2/r^2 + ..., c0 == 1 (u0 -> 1 at infinity)
    * ``{"kind": "axisym", "a_rr": array, "a_theta": array, "a_phi": array,
      "decay": q}`` with component tables on the chart and a declared decay
      rate q (components - 1 = O(r^{-q})).

    Axisymmetric tables are decay-checked against the declared rate; a
    measured rate slower than declared raises ``DecayError`` carrying the
    measured value.
    """
    from .weighted import decay_fit  # local import, avoids a cycle
    from .errors import DecayError

    if isinstance(spec, str):
        spec = spec.strip()
        if spec == "flat":
            return flat_metric(chart)
        if spec.startswith("conformal:"):
            coeffs = [float(t) for t in spec.split(":", 1)[1].split(",")]
            spec = {"kind": "conformal", "coeffs": coeffs}
        else:
            raise MetricError(f"unknown metric spec string {spec!r}")

    kind = spec.get("kind")
    if kind == "flat":
        return flat_metric(chart)
    if kind == "conformal":
        coeffs = spec["coeffs"]
        if abs(coeffs[0] - 1.0) > 1e-14:
            raise MetricError("conformal u0 must tend to 1 (leading "
                              f"coefficient {coeffs[0]}, expected 1)")
        u0 = conformal_factor_from_coeffs(chart, coeffs)
        return conformal_metric(chart, u0, u0_coeffs=coeffs)
    if kind == "axisym":
        if chart.mode != AXISYM:
            raise MetricError("axisym metric spec requires an axisymmetric chart")
        comps = np.stack([np.asarray(spec[k], dtype=float)
                          for k in ("a_rr", "a_theta", "a_phi")], axis=-1)
        g = MetricField(chart, comps)
        declared = float(spec.get("decay", chart.n - 2.5))
        # measure the decay of the worst component against the flat metric
        dev = np.max(np.abs(comps - 1.0), axis=(1, 2))
        fit = decay_fit(ScalarField(Chart(chart.n, chart.s), dev))
        if fit.status == "ok" and fit.q < declared - decay_tol:
            raise DecayError(
                f"metric decay rate {fit.q:.3f} slower than declared "
                f"{declared:.3f}", measured_rate=fit.q)
        if fit.status == "no-decay":
            raise DecayError("metric components do not decay",
                             measured_rate=fit.q)
        return g
    raise MetricError(f"unknown metric spec kind {kind!r}")


# ---------------------------------------------------------------------------
# Laplace-Beltrami operator
# ---------------------------------------------------------------------------

def laplace_coefficients(g: MetricField):
    """Midpoint flux coefficients for the divergence-form operator.

    In s coordinates the radial part of Delta_g is

        (s^2 / W) d/ds ( s^2 W g^{rr} du/ds ),   W = sqrt(det g)|_r-coords,

    and the angular part (axisym) is (1/W) d/dtheta (W g^{thth} du/dtheta).
    Returns (mu_s at s-midpoints, mu_t at theta-midpoints or None, W at
    nodes); the s=0 row of W is +inf and is never used by callers.
    """
    c = g.chart
    W = g.sqrt_det_radial()

    smid = 0.5 * (c.s[:-1] + c.s[1:])
    if c.mode == RADIAL:
        A = g.comps[..., 0]
        B = g.comps[..., 1]
        Amid = 0.5 * (A[:-1] + A[1:])
        Bmid = 0.5 * (B[:-1] + B[1:])
        Wmid = np.sqrt(Amid) * Bmid ** ((c.n - 1) / 2.0) * smid ** (1.0 - c.n)
        mu_s = smid ** 2 * Wmid / Amid
        return mu_s, None, W

    A = g.comps[..., 0]
    T = g.comps[..., 1]
    P = g.comps[..., 2]
    sin = np.sin(c.theta)[None, :]
    # s-direction midpoints
    Am = 0.5 * (A[:-1] + A[1:])
    Tm = 0.5 * (T[:-1] + T[1:])
    Pm = 0.5 * (P[:-1] + P[1:])
    Wm = (np.sqrt(Am * Tm * Pm) * (smid ** -2.0)[:, None] * sin)
    mu_s = (smid ** 2)[:, None] * Wm / Am
    # theta-direction midpoints: g^{thth} = 1/(T r^2) = s^2 / T
    tmid_sin = np.sin(0.5 * (c.theta[:-1] + c.theta[1:]))[None, :]
    Am2 = 0.5 * (A[:, :-1] + A[:, 1:])
    Tm2 = 0.5 * (T[:, :-1] + T[:, 1:])
    Pm2 = 0.5 * (P[:, :-1] + P[:, 1:])
    with np.errstate(divide="ignore"):
        s2 = np.where(c.s > 0, np.where(c.s > 0, c.s, 1.0) ** -2.0, np.inf)
    Wm2 = np.sqrt(Am2 * Tm2 * Pm2) * s2[:, None] * tmid_sin
    with np.errstate(invalid="ignore"):
        # the s=0 row is 0 * inf; it is never referenced by the assembly
        mu_t = np.nan_to_num(Wm2 * (c.s ** 2)[:, None] / Tm2)
    return mu_s, mu_t, W


def laplace_beltrami(g: MetricField, u: ScalarField) -> ScalarField:
    """Nodal Delta_g u in divergence form.

    Interior nodes use the conservative centered stencil; the r=1 boundary
    uses one-sided differences; the s=0 node carries the asymptotic limit 0
    (all fields of interest have finite limits at infinity).
    """
    if u.chart != g.chart:
        raise ChartError("field and metric live on different charts")
    L = build_laplace_matrix(g)
    vals = L @ u.values.ravel()
    return ScalarField(g.chart, vals.reshape(g.chart.shape))


def build_laplace_matrix(g: MetricField):
    """Sparse matrix of Delta_g over all nodes (s=0 row is zero)."""
    import scipy.sparse as sp

    c = g.chart
    h = c.ds
    mu_s, mu_t, W = laplace_coefficients(g)

    if c.mode == RADIAL:
        ns = c.s.size
        pref = np.zeros(ns)
        pref[1:] = c.s[1:] ** 2 / W[1:]
        rows, cols, vals = [], [], []
        for i in range(1, ns - 1):
            a = pref[i] * mu_s[i - 1] / h ** 2
            b = pref[i] * mu_s[i] / h ** 2
            rows += [i, i, i]
            cols += [i - 1, i, i + 1]
            vals += [a, -(a + b), b]
        # one-sided non-conservative row at s = 1
        i = ns - 1
        A = g.comps[:, 0]
        grr = 1.0 / A
        with np.errstate(invalid="ignore"):
            mu_nodal = np.nan_to_num(c.s ** 2 * W * grr)  # finite at s=1
        dmu = (3 * mu_nodal[i] - 4 * mu_nodal[i - 1] + mu_nodal[i - 2]) / (2 * h)
        p = pref[i]
        # Delta u = pref * (dmu * u_s + mu * u_ss), one-sided 2nd order
        cu_s = np.array([1.0, -4.0, 3.0]) / (2 * h)          # u_{i-2},u_{i-1},u_i
        cu_ss = np.array([-1.0, 4.0, -5.0, 2.0]) / h ** 2    # u_{i-3}..u_i
        for k, coef in zip([i - 2, i - 1, i], p * dmu * cu_s):
            rows.append(i); cols.append(k); vals.append(coef)
        for k, coef in zip([i - 3, i - 2, i - 1, i], p * mu_nodal[i] * cu_ss):
            rows.append(i); cols.append(k); vals.append(coef)
        return sp.csr_matrix((vals, (rows, cols)), shape=(ns, ns))

    # axisymmetric: unknowns flattened as idx = i * nt + j
    ns, nt = c.shape
    ht = c.dtheta

    def idx(i, j):
        return i * nt + j

    pref = np.zeros((ns, nt))
    with np.errstate(divide="ignore"):
        pref[1:] = np.where(W[1:] > 0, 1.0 / np.where(W[1:] > 0, W[1:], 1.0),
                            0.0)

    # sin-free density for the radial fluxes: sin(theta) is constant along s
    # and cancels in (1/W) d/ds (W ...), so using it keeps the pole columns
    # (sin = 0) finite.
    A3, T3, P3 = (g.comps[..., k] for k in range(3))
    smid = 0.5 * (c.s[:-1] + c.s[1:])
    Am = 0.5 * (A3[:-1] + A3[1:])
    Tm = 0.5 * (T3[:-1] + T3[1:])
    Pm = 0.5 * (P3[:-1] + P3[1:])
    Wm_ns = np.sqrt(Am * Tm * Pm) * (smid ** -2.0)[:, None]
    mu_s_ns = (smid ** 2)[:, None] * Wm_ns / Am
    Wn_ns = np.ones((ns, nt))
    Wn_ns[1:] = (np.sqrt(A3 * T3 * P3)[1:]
                 * (c.s[1:] ** -2.0)[:, None])
    pref_s = np.zeros((ns, nt))
    pref_s[1:] = 1.0 / Wn_ns[1:]

    rows, cols, vals = [], [], []
    for i in range(1, ns):
        for j in range(nt):
            entries = {}

            def add(k, v):
                entries[k] = entries.get(k, 0.0) + v

            if i < ns - 1:
                # conservative s-fluxes
                a = c.s[i] ** 2 * pref_s[i, j] * mu_s_ns[i - 1, j] / h ** 2
                b = c.s[i] ** 2 * pref_s[i, j] * mu_s_ns[i, j] / h ** 2
                add(idx(i - 1, j), a)
                add(idx(i, j), -(a + b))
                add(idx(i + 1, j), b)
            else:
                # one-sided at s=1 per theta column
                grr = 1.0 / A3[:, j]
                mu_nodal = c.s ** 2 * Wn_ns[:, j] * grr
                dmu = (3 * mu_nodal[i] - 4 * mu_nodal[i - 1]
                       + mu_nodal[i - 2]) / (2 * h)
                p = c.s[i] ** 2 * pref_s[i, j]
                cu_s = np.array([1.0, -4.0, 3.0]) / (2 * h)
                cu_ss = np.array([-1.0, 4.0, -5.0, 2.0]) / h ** 2
                for k, coef in zip([i - 2, i - 1, i], p * dmu * cu_s):
                    add(idx(k, j), coef)
                for k, coef in zip([i - 3, i - 2, i - 1, i],
                                   p * mu_nodal[i] * cu_ss):
                    add(idx(k, j), coef)

            # theta part with pole ghost reflection (d/dtheta = 0 at poles)
            if 0 < j < nt - 1:
                a = pref[i, j] * mu_t[i, j - 1] / ht ** 2
                b = pref[i, j] * mu_t[i, j] / ht ** 2
                add(idx(i, j - 1), a)
                add(idx(i, j), -(a + b))
                add(idx(i, j + 1), b)
            else:
                # at the pole 1/W ~ 1/sin(theta) degenerates; use the
                # regularized limit (1/sin) d/dth (sin du/dth) -> 2 u_thth
                # for even u, discretized with the reflected ghost node.
                T = g.comps[i, j, 1]
                s2 = c.s[i] ** 2
                coef = 2.0 * (s2 / T) * 2.0 / ht ** 2
                jn = j + 1 if j == 0 else j - 1
                add(idx(i, jn), coef)
                add(idx(i, j), -coef)

            for k, v in entries.items():
                rows.append(idx(i, j)); cols.append(k); vals.append(v)

    N = ns * nt
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

def flat_laplacian(chart: Chart, values, order: int = 2) -> np.ndarray:
    """Flat-background Laplacian of nodal values (limit 0 at s=0)."""
    g0 = flat_metric(chart)
    if order == 2:
        L = build_laplace_matrix(g0)
        return (L @ np.asarray(values, float).ravel()).reshape(chart.shape)
    if chart.mode != RADIAL:
        raise ChartError("order-4 flat Laplacian is radial-only")
    # Delta u = s^4 u_ss + (3-n) s^3 u_s, evaluated with 4th-order stencils
    s = chart.s
    us = chart.d_ds(values, order=4)
    uss = chart.d_ds(us, order=4)
    out = s ** 4 * uss + (3.0 - chart.n) * s ** 3 * us
    out[0] = 0.0
    return out


def scalar_curvature(g: MetricField, order: int = 2) -> ScalarField:
    """Scalar curvature R of g.

    Conformally flat metrics use the conformal identity
    R = -(4(n-1)/(n-2)) u0^{-(n+2)/(n-2)} Delta_flat u0; general
    axisymmetric metrics use a finite-difference Christoffel/Ricci
    contraction.
    """
    c = g.chart
    n = c.n
    if g.is_conformally_flat:
        lap = flat_laplacian(c, g.u0, order=order)
        R = -(4.0 * (n - 1) / (n - 2)) * g.u0 ** (-(n + 2.0) / (n - 2.0)) * lap
        return ScalarField(c, R)
    if g.conformal_base is not None:
        # exact conformal identity relative to the stored base metric
        base = g.conformal_base
        phi = g.conformal_phi.values
        Rb = scalar_curvature(base, order=order).values
        lap = laplace_beltrami(base, g.conformal_phi).values
        R = phi ** (-(n + 2.0) / (n - 2.0)) * (
            Rb * phi - (4.0 * (n - 1) / (n - 2)) * lap)
        R[0] = 0.0
        return ScalarField(c, R)
    if c.mode != AXISYM:
        raise MetricError("general curvature requires axisymmetric mode "
                          "(radial metrics are stored conformally flat)")
    return ScalarField(c, _scalar_curvature_christoffel(g))


def _scalar_curvature_christoffel(g: MetricField) -> np.ndarray:
    """R by finite-difference Christoffel symbols, axisymmetric n=3.

    Works in the r coordinate (nonuniform grid), where the flat parts of the
    coordinate components are low-degree polynomials in r and the stencils
    are nearly exact; valid away from s=0 (where R -> 0 by asymptotic
    flatness) and the poles (filled by quadratic extrapolation in theta).
    """
    c = g.chart
    ns, nt = c.shape
    ht = c.dtheta

    # work on the subgrid excluding s=0 and the poles to avoid the
    # coordinate degeneracies; one-sided stencils at the retained edges
    sl = (slice(1, None), slice(1, nt - 1))
    r_sub = 1.0 / c.s[1:]
    th_sub = c.theta[1:nt - 1]
    sin2 = (np.sin(th_sub) ** 2)[None, :]
    r2 = (r_sub ** 2)[:, None]
    Gs = np.zeros((ns - 1, nt - 2, 3, 3))
    Gs[..., 0, 0] = g.comps[1:, 1:nt - 1, 0]
    Gs[..., 1, 1] = g.comps[1:, 1:nt - 1, 1] * r2
    Gs[..., 2, 2] = g.comps[1:, 1:nt - 1, 2] * r2 * sin2
    Ginv = np.zeros_like(Gs)
    for k in range(3):
        Ginv[..., k, k] = 1.0 / Gs[..., k, k]

    def grad(F):
        # d/dr (nonuniform) and d/dtheta of a nodal array on the subgrid
        dr = np.gradient(F, r_sub, axis=0, edge_order=2)
        dt = np.gradient(F, ht, axis=1, edge_order=2)
        return dr, dt

    # metric derivatives with the flat factors differentiated analytically:
    # G_ii = a_i * f_i with f = (1, r^2, r^2 sin^2); only the smooth frame
    # components a_i are finite-differenced, so the coordinate singularities
    # never meet a difference stencil
    a_sub = g.comps[1:, 1:nt - 1, :]
    sin_cos = (np.sin(th_sub) * np.cos(th_sub))[None, :]
    rcol = r_sub[:, None]
    f_vals = [np.ones_like(rcol * sin2), r2 + 0.0 * sin2, r2 * sin2]
    df_dr = [0.0, 2.0 * rcol + 0.0 * sin2, 2.0 * rcol * sin2]
    df_dt = [0.0, 0.0, r2 * 2.0 * sin_cos]
    dG = np.zeros(Gs.shape[:2] + (3, 3, 3))  # dG[..., l, i, j] = d_l G_ij
    for i in range(3):
        da_dr, da_dt = grad(a_sub[..., i])
        dG[..., 0, i, i] = da_dr * f_vals[i] + a_sub[..., i] * df_dr[i]
        dG[..., 1, i, i] = da_dt * f_vals[i] + a_sub[..., i] * df_dt[i]

    # Gamma^k_ij = 1/2 g^{kk} (d_i G_jk + d_j G_ik - d_k G_ij)
    Gam = np.zeros_like(dG)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                t = dG[..., i, j, k] if i < 2 else 0.0
                t2 = dG[..., j, i, k] if j < 2 else 0.0
                t3 = dG[..., k, i, j] if k < 2 else 0.0
                Gam[..., k, i, j] = 0.5 * Ginv[..., k, k] * (t + t2 - t3)

    # split Gamma = F + D: F is the flat-background part (exact, including
    # the cot(theta) singularity), D the smooth deviation.  The purely flat
    # terms of the Ricci contraction sum to zero curvature, so only terms
    # containing D survive -- and only D is ever finite-differenced.
    cot = (np.cos(th_sub) / np.sin(th_sub))[None, :] + 0.0 * rcol
    inv_r = 1.0 / rcol + 0.0 * sin2
    F = np.zeros_like(Gam)
    F[..., 0, 1, 1] = -rcol + 0.0 * sin2
    F[..., 0, 2, 2] = -rcol * sin2
    F[..., 1, 0, 1] = F[..., 1, 1, 0] = inv_r
    F[..., 1, 2, 2] = -sin_cos + 0.0 * rcol
    F[..., 2, 0, 2] = F[..., 2, 2, 0] = inv_r
    F[..., 2, 1, 2] = F[..., 2, 2, 1] = cot
    D = Gam - F

    dD = np.zeros(Gs.shape[:2] + (2, 3, 3, 3))  # dD[..., l, k, i, j]
    for k in range(3):
        for i in range(3):
            for j in range(3):
                if np.any(D[..., k, i, j]):
                    ds, dt = grad(D[..., k, i, j])
                    dD[..., 0, k, i, j] = ds
                    dD[..., 1, k, i, j] = dt

    Ric = np.zeros(Gs.shape[:2] + (3, 3))
    for i in range(3):
        for j in range(3):
            term = np.zeros(Gs.shape[:2])
            for k in range(3):
                if k < 2:
                    term += dD[..., k, k, i, j]
                if j < 2:
                    term -= dD[..., j, k, k, i]
            for k in range(3):
                for l in range(3):
                    term += (F[..., k, k, l] * D[..., l, i, j]
                             + D[..., k, k, l] * F[..., l, i, j]
                             + D[..., k, k, l] * D[..., l, i, j]
                             - F[..., k, j, l] * D[..., l, i, k]
                             - D[..., k, j, l] * F[..., l, i, k]
                             - D[..., k, j, l] * D[..., l, i, k])
            Ric[..., i, j] = term

    Rsub = np.zeros(Gs.shape[:2])
    for i in range(3):
        Rsub += Ginv[..., i, i] * Ric[..., i, i]

    R = np.zeros(c.shape)
    R[sl] = Rsub
    R[0, :] = 0.0
    # quadratic extrapolation onto the pole columns
    R[1:, 0] = 3 * R[1:, 1] - 3 * R[1:, 2] + R[1:, 3]
    R[1:, -1] = 3 * R[1:, -2] - 3 * R[1:, -3] + R[1:, -4]
    return R


# ---------------------------------------------------------------------------
# Boundary mean curvature and conformal transformations
# ---------------------------------------------------------------------------

def boundary_mean_curvature(g: MetricField) -> BoundaryField:
    """H of the r=1 slice, sum of principal curvatures, normal away from
    infinity.

    H = -(1/sqrt(g_rr)) d/dr ln sqrt(det h) with h the induced metric; in s
    coordinates d/dr = -d/ds at s=1, so the sign flips to a one-sided
    s-derivative.
    """
    c = g.chart
    h = c.ds
    n = c.n
    s = c.s

    if c.mode == RADIAL:
        A = g.comps[:, 0]
        B = g.comps[:, 1]
        # ln sqrt(det h) = (n-1)/2 ln B + (n-1) ln r  (+ const)
        f = 0.5 * (n - 1) * np.log(B) + (n - 1) * np.log(
            np.where(s > 0, np.where(s > 0, s, 1.0) ** -1.0, 1.0))
        dfs = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
        H = dfs / np.sqrt(A[-1])  # -(1/sqrt A) * (-d/ds f)
        return BoundaryField(c, np.array([H]))

    A = g.comps[:, :, 0]
    T = g.comps[:, :, 1]
    P = g.comps[:, :, 2]
    with np.errstate(divide="ignore"):
        lr = np.log(np.where(s > 0, np.where(s > 0, s, 1.0) ** -1.0, 1.0))
    f = 0.5 * (np.log(T) + np.log(P)) + 2.0 * lr[:, None]
    dfs = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return BoundaryField(c, dfs / np.sqrt(A[-1]))


def normal_derivative(g: MetricField, u: ScalarField) -> BoundaryField:
    """du/deta at r=1 with eta away from infinity: (1/sqrt g_rr) du/ds|_{s=1},
    one-sided second order."""
    if u.chart != g.chart:
        raise ChartError("field and metric live on different charts")
    h = g.chart.ds
    v = u.values
    dv = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return BoundaryField(g.chart, np.atleast_1d(
        dv / np.sqrt(g.boundary_a_rr())))


def conformal_transform(g: MetricField, phi: ScalarField) -> MetricField:
    """g~ = phi^{4/(n-2)} g, with conformal-factor bookkeeping."""
    if phi.chart != g.chart:
        raise ChartError("field and metric live on different charts")
    p = phi.values
    if np.any(p <= 0.0):
        raise PositivityError(
            f"conformal factor must be positive (min {p.min():.3g})")
    n = g.chart.n
    fac = p ** (4.0 / (n - 2.0))
    comps = g.comps * fac[..., None]
    if g.is_conformally_flat:
        return MetricField(g.chart, comps, is_conformally_flat=True,
                           u0=g.u0 * p)
    out = MetricField(g.chart, comps)
    out.conformal_base = g
    out.conformal_phi = phi
    return out


def conformal_mean_curvature(g: MetricField, u: ScalarField) -> BoundaryField:
    """Predicted boundary mean curvature of u^{4/(n-2)} g (sum convention).

    H~ = u^{-n/(n-2)} ( (2(n-1)/(n-2)) du/deta + H u ).
    """
    if np.any(u.values <= 0.0):
        raise PositivityError("conformal factor must be positive")
    n = g.chart.n
    H = boundary_mean_curvature(g).values
    dudeta = normal_derivative(g, u).values
    ub = u.boundary_values()
    Ht = ub ** (-n / (n - 2.0)) * (
        conformal_law_coefficient(n) * dudeta + H * ub)
    return BoundaryField(g.chart, Ht)


def check_asymptotic_flatness(g: MetricField, tol: float = 0.25):
    """Decay-rate check of g - flat; returns the fit (None for exact flat)."""
    from .weighted import decay_fit

    if g.chart.mode == RADIAL:
        dev = np.max(np.abs(g.comps - 1.0), axis=-1)
        rc = g.chart
    else:
        dev = np.max(np.abs(g.comps - 1.0), axis=(1, 2))
        rc = Chart(g.chart.n, g.chart.s)
    if np.max(dev) < 1e-14:
        return None
    fit = decay_fit(ScalarField(rc, dev))
    need = g.chart.n - 2.5  # q >= n - 5/2 means o(r^{5/2-n}) membership
    if fit.status == "no-decay" or (fit.status == "ok" and fit.q < need - tol):
        from .errors import DecayError
        raise DecayError(
            f"metric is not asymptotically flat at the required rate "
            f"(measured q={fit.q:.3f}, need >= {need:.3f})",
            measured_rate=fit.q)
    return fit
