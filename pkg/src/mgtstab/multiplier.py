"""Quadrature verification of the integration-by-parts multiplier identities.

Each identity is the space-time expansion obtained by multiplying the
damped-wave form ``z_tt - b Lap z + gamma u_tt = f`` by a multiplier
(``h . grad z``, ``(1/2) z div h`` or ``z``) and integrating by parts.
Closed-form manufactured fields make every term computable by
quadrature: ``f`` is defined from the other fields so the equation holds
exactly, so the only error left is the quadrature error, which must
converge at second order under joint space/time refinement.  Boundary
terms are kept in their raw form with the normal derivative explicit,
except for the ``z``-multiplier identity which substitutes both boundary
conditions and therefore needs boundary-condition-satisfying fields.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import CertificationError
from .geometry import VectorFieldH


@dataclass
class ManufacturedField:
    """Closed-form space-time fields for identity checks.

    All callables are vectorized: time-dependent ones take ``(t, x)``
    with ``x`` of shape ``(n, dim)`` and return ``(n,)`` (gradients
    ``(n, dim)``); ``gamma`` takes ``x`` only.  The forcing consistent
    with the z-equation is ``f = z_tt - b lap_z + gamma u_tt``.
    """

    z: callable
    zt: callable
    ztt: callable
    grad_z: callable
    lap_z: callable
    gamma: callable
    utt: callable
    family: str = "generic"
    meta: dict = field(default_factory=dict)

    def f(self, t, x, b):
        return self.ztt(t, x) - b * self.lap_z(t, x) + self.gamma(x) * self.utt(t, x)

    def scaled(self, s):
        """The field family with z (and u_tt, to keep f consistent) scaled by s."""
        return ManufacturedField(
            z=lambda t, x: s * self.z(t, x),
            zt=lambda t, x: s * self.zt(t, x),
            ztt=lambda t, x: s * self.ztt(t, x),
            grad_z=lambda t, x: s * self.grad_z(t, x),
            lap_z=lambda t, x: s * self.lap_z(t, x),
            gamma=self.gamma,
            utt=lambda t, x: s * self.utt(t, x),
            family=self.family + "-scaled",
            meta=dict(self.meta),
        )


def trig_1d():
    """Smooth 1D family z = cos(pi x) sin(t) (does not satisfy the BCs)."""
    pi = np.pi
    return ManufacturedField(
        z=lambda t, x: np.cos(pi * x[:, 0]) * np.sin(t),
        zt=lambda t, x: np.cos(pi * x[:, 0]) * np.cos(t),
        ztt=lambda t, x: -np.cos(pi * x[:, 0]) * np.sin(t),
        grad_z=lambda t, x: (-pi * np.sin(pi * x[:, 0]) * np.sin(t))[:, None],
        lap_z=lambda t, x: -(pi**2) * np.cos(pi * x[:, 0]) * np.sin(t),
        gamma=lambda x: 0.3 + 0.1 * x[:, 0],
        utt=lambda t, x: (1.0 + x[:, 0]) * np.sin(2.0 * t),
        family="trig-1d",
    )


def trig_2d():
    """Smooth 2D family z = cos(pi x) cos(pi y) sin(t)."""
    pi = np.pi

    def gz(t, x):
        return np.column_stack(
            [
                -pi * np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1]) * np.sin(t),
                -pi * np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1]) * np.sin(t),
            ]
        )

    return ManufacturedField(
        z=lambda t, x: np.cos(pi * x[:, 0]) * np.cos(pi * x[:, 1]) * np.sin(t),
        zt=lambda t, x: np.cos(pi * x[:, 0]) * np.cos(pi * x[:, 1]) * np.cos(t),
        ztt=lambda t, x: -np.cos(pi * x[:, 0]) * np.cos(pi * x[:, 1]) * np.sin(t),
        grad_z=gz,
        lap_z=lambda t, x: -2 * pi**2 * np.cos(pi * x[:, 0]) * np.cos(pi * x[:, 1]) * np.sin(t),
        gamma=lambda x: 0.2 + 0.1 * x[:, 1],
        utt=lambda t, x: (1.0 + x[:, 0] * x[:, 1]) * np.cos(t),
        family="trig-2d",
    )


def bc_satisfying_1d(omega=1.3, kappa0=1.0, kappa1=1.0):
    """1D separable family satisfying both boundary conditions on (0, 1).

    ``z = X(x) e^{s t}`` with ``X = cos(omega x) + (kappa0/omega)
    sin(omega x)`` (Robin condition at x=0 for free) and the growth rate
    ``s = -X'(1) / (kappa1 X(1))`` enforcing the feedback condition at
    x=1.
    """

    def X(x):
        return np.cos(omega * x) + (kappa0 / omega) * np.sin(omega * x)

    def Xp(x):
        return -omega * np.sin(omega * x) + kappa0 * np.cos(omega * x)

    X1, Xp1 = X(np.array([1.0]))[0], Xp(np.array([1.0]))[0]
    if abs(X1) < 1e-8:
        raise ValueError("degenerate family: X(1) ~ 0, pick another omega")
    s = -Xp1 / (kappa1 * X1)
    fld = ManufacturedField(
        z=lambda t, x: X(x[:, 0]) * np.exp(s * t),
        zt=lambda t, x: s * X(x[:, 0]) * np.exp(s * t),
        ztt=lambda t, x: s**2 * X(x[:, 0]) * np.exp(s * t),
        grad_z=lambda t, x: (Xp(x[:, 0]) * np.exp(s * t))[:, None],
        lap_z=lambda t, x: -(omega**2) * X(x[:, 0]) * np.exp(s * t),
        gamma=lambda x: 0.2 * (1.0 + x[:, 0]),
        utt=lambda t, x: (1.0 - x[:, 0] ** 2) * np.exp(s * t),
        family="bc-1d",
    )
    fld.meta.update({"s": float(s), "omega": omega, "kappa0": kappa0, "kappa1": kappa1})
    return fld


def static_poly_1d(b=1.0, kappa0=2.0):
    """Static polynomial z = -x^2 + 2x + 1 (Robin at x=0 with kappa0=2).

    Time-independent, so the z-multiplier identity collapses to the
    elliptic balance; with Simpson quadrature every integral is exact.
    """
    zero = lambda t, x: np.zeros(len(x))
    return ManufacturedField(
        z=lambda t, x: -x[:, 0] ** 2 + 2 * x[:, 0] + 1.0,
        zt=zero,
        ztt=zero,
        grad_z=lambda t, x: (2.0 - 2.0 * x[:, 0])[:, None],
        lap_z=lambda t, x: np.full(len(x), -2.0),
        gamma=lambda x: np.full(len(x), 0.5),
        utt=lambda t, x: x[:, 0] + 0.5,
        family="static-poly-1d",
        meta={"kappa0": kappa0, "b": b},
    )


# -- quadrature helpers ------------------------------------------------------


def _default_rule(mesh):
    return "trapezoid" if mesh.dim == 1 else "vertex"


class _FieldOnMesh:
    """Evaluates an analytic multiplier field on mesh quadrature sets."""

    def __init__(self, h, mesh, allow_uncertified):
        if isinstance(h, VectorFieldH):
            if not allow_uncertified and not h.certified:
                raise CertificationError("multiplier field is not certified")
            if h.analytic is None:
                raise ValueError(
                    "identity quadrature needs a field with closed-form "
                    "derivatives (analytic backend missing)"
                )
            self.analytic = h.analytic
            self.gamma0_values = {
                int(f): h.gamma0_facet_values[k] for k, f in enumerate(h.gamma0_facet_index)
            }
        else:
            self.analytic = h
            self.gamma0_values = {}
        self.mesh = mesh

    def values(self, x):
        return self.analytic(x)

    def trace(self, pts, facet_idx):
        """Field values at facet quadrature points, certified where available."""
        nq = pts.shape[1]
        out = self.analytic(pts.reshape(-1, self.mesh.dim)).reshape(len(facet_idx), nq, -1)
        for k, f in enumerate(facet_idx):
            if int(f) in self.gamma0_values:
                out[k] = self.gamma0_values[int(f)]
        return out


def _normalized(terms):
    total = sum(terms.values())
    scale = max(max(abs(v) for v in terms.values()), 1e-300)
    return abs(total) / scale


def residual_hgradz(fields, h, mesh, b, times, space_rule=None, allow_uncertified=False):
    """Residual of the ``h . grad z`` multiplier identity.

    Computes every term of the integrated-by-parts expansion by
    space-time quadrature and returns their normalized sum together with
    the gamma0 annihilation term ``int int_{gamma0} (z_t^2 - b |grad z|^2)
    (h . nu)``, which must sit at the certification tolerance.
    """
    rule = space_rule or _default_rule(mesh)
    fom = _FieldOnMesh(h, mesh, allow_uncertified)
    times = np.asarray(times, float)
    g0, g1 = mesh.gamma0_facets, mesh.gamma1_facets
    all_f = np.concatenate([g0, g1])
    fpts, fw = mesh.facet_quadrature()

    def boundary_series(facet_idx, pointwise):
        """Time series of a boundary integral; pointwise(t, pts_flat, h_vals, nu) -> flat."""
        if len(facet_idx) == 0:
            return np.zeros(len(times))
        pts, w = fpts[facet_idx], fw[facet_idx]
        hv = fom.trace(pts, facet_idx)
        nu = np.repeat(mesh.facet_normals[facet_idx][:, None, :], pts.shape[1], axis=1)
        flat = pts.reshape(-1, mesh.dim)
        hflat = hv.reshape(-1, mesh.dim)
        nuflat = nu.reshape(-1, mesh.dim)
        out = np.empty(len(times))
        for i, t in enumerate(times):
            out[i] = np.sum(pointwise(t, flat, hflat, nuflat).reshape(w.shape) * w)
        return out

    vpts, vw = mesh.element_quadrature(rule)
    vflat = vpts.reshape(-1, mesh.dim)
    hvol = fom.values(vflat)
    Jvol = fom.analytic.jacobian(vflat)
    Jsym2 = Jvol + np.transpose(Jvol, (0, 2, 1))
    divvol = fom.analytic.divergence(vflat)
    gam = fields.gamma(vflat)

    def vol_series(pointwise):
        out = np.empty(len(times))
        for i, t in enumerate(times):
            out[i] = np.sum(pointwise(t).reshape(vw.shape) * vw)
        return out

    hgz = lambda t: np.sum(hvol * fields.grad_z(t, vflat), axis=1)

    terms = {}
    end = lambda t: np.sum((fields.zt(t, vflat) * hgz(t)).reshape(vw.shape) * vw)
    terms["time_boundary"] = end(times[-1]) - end(times[0])
    terms["vol_div_zt2"] = 0.5 * np.trapezoid(
        vol_series(lambda t: divvol * fields.zt(t, vflat) ** 2), times
    )
    terms["bdy_hnu_zt2"] = -0.5 * np.trapezoid(
        boundary_series(
            all_f, lambda t, x, hh, nn: np.sum(hh * nn, axis=1) * fields.zt(t, x) ** 2
        ),
        times,
    )
    terms["vol_jacobian"] = (b / 2.0) * np.trapezoid(
        vol_series(
            lambda t: np.einsum(
                "ni,nik,nk->n", fields.grad_z(t, vflat), Jsym2, fields.grad_z(t, vflat)
            )
        ),
        times,
    )
    terms["vol_div_grad2"] = -(b / 2.0) * np.trapezoid(
        vol_series(lambda t: divvol * np.sum(fields.grad_z(t, vflat) ** 2, axis=1)), times
    )
    terms["bdy_hnu_grad2"] = (b / 2.0) * np.trapezoid(
        boundary_series(
            all_f,
            lambda t, x, hh, nn: np.sum(hh * nn, axis=1)
            * np.sum(fields.grad_z(t, x) ** 2, axis=1),
        ),
        times,
    )
    terms["bdy_dnu"] = -b * np.trapezoid(
        boundary_series(
            all_f,
            lambda t, x, hh, nn: np.sum(fields.grad_z(t, x) * nn, axis=1)
            * np.sum(hh * fields.grad_z(t, x), axis=1),
        ),
        times,
    )
    terms["vol_gamma"] = np.trapezoid(vol_series(lambda t: gam * fields.utt(t, vflat) * hgz(t)), times)
    terms["vol_f"] = -np.trapezoid(
        vol_series(lambda t: fields.f(t, vflat, b) * hgz(t)), times
    )

    gamma0_term = abs(
        np.trapezoid(
            boundary_series(
                g0,
                lambda t, x, hh, nn: (
                    fields.zt(t, x) ** 2 - b * np.sum(fields.grad_z(t, x) ** 2, axis=1)
                )
                * np.sum(hh * nn, axis=1),
            ),
            times,
        )
    )
    return {"residual": _normalized(terms), "terms": terms, "gamma0_term": gamma0_term}


def residual_zdivh(fields, h, mesh, b, times, space_rule=None, allow_uncertified=False):
    """Residual of the ``(1/2) z div h`` multiplier identity.

    Includes the ``grad(div h)`` volume term, reported separately (it
    vanishes identically for fields with constant divergence).
    """
    rule = space_rule or _default_rule(mesh)
    fom = _FieldOnMesh(h, mesh, allow_uncertified)
    times = np.asarray(times, float)
    vpts, vw = mesh.element_quadrature(rule)
    vflat = vpts.reshape(-1, mesh.dim)
    divvol = fom.analytic.divergence(vflat)
    gdiv = fom.analytic.grad_divergence(vflat)
    gam = fields.gamma(vflat)

    def vol_series(pointwise):
        out = np.empty(len(times))
        for i, t in enumerate(times):
            out[i] = np.sum(pointwise(t).reshape(vw.shape) * vw)
        return out

    fpts, fw = mesh.facet_quadrature()
    all_f = np.concatenate([mesh.gamma0_facets, mesh.gamma1_facets])

    def dnu_series():
        pts, w = fpts[all_f], fw[all_f]
        flat = pts.reshape(-1, mesh.dim)
        nu = np.repeat(mesh.facet_normals[all_f][:, None, :], pts.shape[1], axis=1).reshape(
            -1, mesh.dim
        )
        dv = fom.analytic.divergence(flat)
        out = np.empty(len(times))
        for i, t in enumerate(times):
            vals = np.sum(fields.grad_z(t, flat) * nu, axis=1) * fields.z(t, flat) * dv
            out[i] = np.sum(vals.reshape(w.shape) * w)
        return out

    terms = {}
    end = lambda t: 0.5 * np.sum(
        (fields.zt(t, vflat) * fields.z(t, vflat) * divvol).reshape(vw.shape) * vw
    )
    terms["time_boundary"] = end(times[-1]) - end(times[0])
    terms["vol_zt2"] = -0.5 * np.trapezoid(
        vol_series(lambda t: fields.zt(t, vflat) ** 2 * divvol), times
    )
    terms["vol_grad2"] = (b / 2.0) * np.trapezoid(
        vol_series(lambda t: np.sum(fields.grad_z(t, vflat) ** 2, axis=1) * divvol), times
    )
    graddiv_series = vol_series(
        lambda t: fields.z(t, vflat) * np.sum(fields.grad_z(t, vflat) * gdiv, axis=1)
    )
    terms["vol_graddiv"] = (b / 2.0) * np.trapezoid(graddiv_series, times)
    terms["bdy_dnu"] = -(b / 2.0) * np.trapezoid(dnu_series(), times)
    terms["vol_gamma"] = 0.5 * np.trapezoid(
        vol_series(lambda t: gam * fields.utt(t, vflat) * fields.z(t, vflat) * divvol), times
    )
    terms["vol_f"] = -0.5 * np.trapezoid(
        vol_series(lambda t: fields.f(t, vflat, b) * fields.z(t, vflat) * divvol), times
    )
    return {
        "residual": _normalized(terms),
        "terms": terms,
        "graddiv_term": abs(terms["vol_graddiv"]),
    }


def residual_zmul(fields, mesh, b, kappa0, kappa1, times, space_rule=None):
    """Residual of the plain ``z`` multiplier identity, BCs substituted.

    Requires fields whose trace satisfies both boundary conditions (the
    Robin condition on gamma0 and the velocity feedback on gamma1); the
    boundary terms then appear as ``b int_{gamma0} kappa0 z^2`` and the
    time-boundary gamma1 term ``(b/2) [int_{gamma1} kappa1 z^2]``.
    """
    rule = space_rule or _default_rule(mesh)
    times = np.asarray(times, float)
    vpts, vw = mesh.element_quadrature(rule)
    vflat = vpts.reshape(-1, mesh.dim)
    gam = fields.gamma(vflat)

    def vol_series(pointwise):
        out = np.empty(len(times))
        for i, t in enumerate(times):
            out[i] = np.sum(pointwise(t).reshape(vw.shape) * vw)
        return out

    def bdy_int(facet_idx, coeff, t):
        if len(facet_idx) == 0:
            return 0.0
        pts, w = mesh.facet_quadrature()
        pts, w = pts[facet_idx], w[facet_idx]
        flat = pts.reshape(-1, mesh.dim)
        cf = coeff(flat) if callable(coeff) else float(coeff)
        vals = cf * fields.z(t, flat) ** 2
        return float(np.sum(np.asarray(vals).reshape(w.shape) * w))

    terms = {}
    end = lambda t: np.sum((fields.zt(t, vflat) * fields.z(t, vflat)).reshape(vw.shape) * vw)
    terms["time_boundary"] = end(times[-1]) - end(times[0])
    terms["vol_zt2"] = -np.trapezoid(vol_series(lambda t: fields.zt(t, vflat) ** 2), times)
    terms["vol_grad2"] = b * np.trapezoid(
        vol_series(lambda t: np.sum(fields.grad_z(t, vflat) ** 2, axis=1)), times
    )
    g0series = np.array([bdy_int(mesh.gamma0_facets, kappa0, t) for t in times])
    terms["gamma0_robin"] = b * np.trapezoid(g0series, times)
    terms["gamma1_feedback"] = (b / 2.0) * (
        bdy_int(mesh.gamma1_facets, kappa1, times[-1])
        - bdy_int(mesh.gamma1_facets, kappa1, times[0])
    )
    terms["vol_gamma"] = np.trapezoid(
        vol_series(lambda t: gam * fields.utt(t, vflat) * fields.z(t, vflat)), times
    )
    terms["vol_f"] = -np.trapezoid(vol_series(lambda t: fields.f(t, vflat, b) * fields.z(t, vflat)), times)
    return {"residual": _normalized(terms), "terms": terms}


def refinement_slope(residuals, factors=None):
    """Least-squares slope of log(residual) against log(1/h)."""
    r = np.asarray(residuals, float)
    n = len(r)
    x = np.log(np.asarray(factors, float)) if factors is not None else np.log(2.0) * np.arange(n)
    A = np.column_stack([np.ones(n), x])
    coef, *_ = np.linalg.lstsq(A, np.log(r), rcond=None)
    return -float(coef[1])


def reconstruction_diagnostic(trajectory, bundle, params, window, delta=0.25, source=None):
    """Observability-style diagnostic: integrated energy vs its bounders.

    Computes ``int_s^{T-s} E1 dt`` and the terms that dominate it
    (endpoint energies, integrated boundary/interior dissipation,
    integrated forcing, and a lower-order term surrogate: the
    time-integrated spectral fractional norm ``||z||^2_{1-delta}`` built
    from the generalized eigenpairs of (Ktilde, M)).  Reports the
    smallest constant making the inequality hold for this run.
    """
    t = trajectory.times
    s, te = window
    i0 = int(np.searchsorted(t, s))
    i1 = min(int(np.searchsorted(t, te)), len(t) - 1)
    if i1 <= i0 + 1:
        raise ValueError("window too narrow for the stored samples")
    sl = slice(i0, i1 + 1)

    lhs = float(np.trapezoid(trajectory.E1[sl], t[sl]))
    terms = {
        "E1_start": float(trajectory.E1[i0]),
        "E1_end": float(trajectory.E1[i1]),
        "boundary_dissipation": float(np.trapezoid(trajectory.D_boundary[sl], t[sl])),
        "interior_dissipation": float(np.trapezoid(trajectory.D_interior[sl], t[sl])),
    }
    if source is None or source.is_zero:
        terms["forcing"] = 0.0
    else:
        M = bundle.Mmat
        f2 = [float(source(ti) @ (M @ source(ti))) for ti in t[sl]]
        terms["forcing"] = float(np.trapezoid(f2, t[sl]))

    if trajectory.states_u is None:
        raise ValueError("reconstruction diagnostic needs stored state snapshots")
    K = bundle.Ktilde.toarray()
    M = bundle.Mmat.toarray()
    lam, V = scipy.linalg.eigh(K, M)
    lam = np.maximum(lam, 0.0)
    q = params.q
    z_samples = trajectory.states_ut[sl] + q * trajectory.states_u[sl]
    coords = z_samples @ (M @ V)
    frac = (coords**2) @ (lam ** (1.0 - delta))
    terms["lot_surrogate"] = float(np.trapezoid(frac, t[sl]))

    rhs_total = sum(terms.values())
    implied_C = lhs / rhs_total if rhs_total > 0 else np.inf
    return {
        "lhs": lhs,
        "rhs_terms": terms,
        "implied_C": float(implied_C),
        "delta": float(delta),
        "lot_definition": "time-integrated spectral fractional norm of z (own surrogate)",
    }
