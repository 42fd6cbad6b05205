"""Spatial domains with partitioned boundaries and multiplier vector fields.

The boundary of the domain is split into an undissipated Robin part
(``gamma0``) and an absorbing velocity-feedback part (``gamma1``).  This
module validates domain descriptions, checks the two geometric hypotheses
required by the boundary-multiplier machinery (star-shape of gamma0 with
respect to a reference point ``x0``, and discrete convexity of the gamma0
chain), and constructs a bent radial vector field ``h``: equal to
``x - x0`` away from gamma0 and corrected inside a collar so that its
trace on gamma0 is tangential while the symmetric part of its Jacobian
stays uniformly positive definite.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, GeometryError

GAMMA0 = 0
GAMMA1 = 1

_TAG_NAMES = {"gamma0": GAMMA0, "gamma1": GAMMA1}


def _as_tag(value):
    if isinstance(value, str):
        try:
            return _TAG_NAMES[value.lower()]
        except KeyError:
            raise GeometryError("unknown boundary tag %r" % (value,))
    if value in (GAMMA0, GAMMA1):
        return int(value)
    raise GeometryError("unknown boundary tag %r" % (value,))


def _segments_properly_intersect(p1, p2, q1, q2):
    # Standard orientation test; touching at shared endpoints is handled
    # by the caller (adjacent segments are skipped).
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-14:
            return 0
        return 1 if v > 0 else -1

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass
class Geometry:
    """Domain description: interval (1D) or closed ccw polygon (2D).

    Attributes
    ----------
    dimension : int
        1 or 2.
    vertices : ndarray
        1D: the two interval endpoints ``[x_left, x_right]``.
        2D: polygon vertices, shape ``(n, 2)``, counterclockwise; segment
        ``i`` joins vertex ``i`` to vertex ``(i + 1) % n``.
    segment_tags : ndarray of int
        Tag (GAMMA0 or GAMMA1) per boundary segment.  1D: per endpoint.
    x0 : ndarray
        Reference point for the star-shape condition.
    """

    dimension: int
    vertices: np.ndarray
    segment_tags: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.segment_tags = np.asarray(
            [_as_tag(t) for t in np.atleast_1d(self.segment_tags)], dtype=np.int8
        )
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.dimension == 1:
            if self.vertices.shape != (2,):
                raise GeometryError("1D geometry needs exactly two endpoints")
            if not self.vertices[0] < self.vertices[1]:
                raise GeometryError("interval endpoints must be increasing")
            if self.segment_tags.shape != (2,):
                raise GeometryError("1D geometry needs one tag per endpoint")
            if self.x0.shape != (1,):
                raise GeometryError("x0 must be a single coordinate in 1D")
        elif self.dimension == 2:
            if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
                raise GeometryError("2D vertices must have shape (n, 2)")
            n = len(self.vertices)
            if n < 3:
                raise GeometryError("polygon needs at least three vertices")
            if self.segment_tags.shape != (n,):
                raise GeometryError("need one tag per polygon segment")
            if self.x0.shape != (2,):
                raise GeometryError("x0 must be a point in the plane")
            edges = np.roll(self.vertices, -1, axis=0) - self.vertices
            lengths = np.linalg.norm(edges, axis=1)
            if np.any(lengths < 1e-12):
                raise GeometryError("polygon has a degenerate segment")
            if self.signed_area() <= 0:
                raise GeometryError("polygon must be counterclockwise (signed area > 0)")
            self._check_simple()
        else:
            raise GeometryError("dimension must be 1 or 2")
        if not np.any(self.segment_tags == GAMMA1):
            raise GeometryError("gamma1 must be nonempty")

    # -- constructors ------------------------------------------------------

    @classmethod
    def interval(cls, x_left, x_right, gamma0_end="left", x0=None):
        """Interval domain with one endpoint tagged gamma0.

        ``gamma0_end`` is ``"left"``, ``"right"`` or ``None`` (no Robin
        end; both endpoints absorbing).
        """
        tags = [GAMMA1, GAMMA1]
        if gamma0_end == "left":
            tags[0] = GAMMA0
        elif gamma0_end == "right":
            tags[1] = GAMMA0
        elif gamma0_end is not None:
            raise GeometryError("gamma0_end must be 'left', 'right' or None")
        if x0 is None:
            x0 = x_left if gamma0_end == "left" else x_right
        return cls(1, np.array([x_left, x_right], float), np.array(tags), np.array([x0], float))

    @classmethod
    def polygon(cls, vertices, segment_tags, x0):
        return cls(2, np.asarray(vertices, float), np.asarray(segment_tags), np.asarray(x0, float))

    # -- basic queries -----------------------------------------------------

    def _check_simple(self):
        n = len(self.vertices)
        segs = [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j - i) % n in (1, n - 1):
                    continue
                if _segments_properly_intersect(*segs[i], *segs[j]):
                    raise GeometryError("polygon is self-intersecting")

    def signed_area(self):
        if self.dimension == 1:
            return self.vertices[1] - self.vertices[0]
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)

    @property
    def n_segments(self):
        return 2 if self.dimension == 1 else len(self.vertices)

    def segment_coords(self, i):
        """Endpoint coordinates of boundary segment ``i``.

        1D: the endpoint position as a float.  2D: array ``[[a], [b]]``.
        """
        if self.dimension == 1:
            return self.vertices[i]
        n = len(self.vertices)
        return np.array([self.vertices[i], self.vertices[(i + 1) % n]])

    def segment_normal(self, i):
        if self.dimension == 1:
            return np.array([-1.0]) if i == 0 else np.array([1.0])
        a, b = self.segment_coords(i)
        d = b - a
        # interior lies to the left of the ccw traversal, so the outward
        # normal is the right-hand rotation of the edge direction
        nu = np.array([d[1], -d[0]])
        return nu / np.linalg.norm(nu)

    def segments_with_tag(self, tag):
        return np.flatnonzero(self.segment_tags == tag)

    def diameter(self):
        if self.dimension == 1:
            return self.vertices[1] - self.vertices[0]
        v = self.vertices
        d2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(d2.max()))

    def gamma0_chain(self):
        """Ordered vertex coordinates of the gamma0 chain.

        Follows the polygon orientation.  Raises if gamma0 is present but
        not a single contiguous run of segments.  Returns an empty array
        for empty gamma0; for 1D, the gamma0 endpoint position(s).
        """
        idx = self.segments_with_tag(GAMMA0)
        if self.dimension == 1:
            return self.vertices[idx]
        if len(idx) == 0:
            return np.empty((0, 2))
        n = self.n_segments
        if len(idx) == n:
            starts = [0]
        else:
            in_g0 = np.zeros(n, bool)
            in_g0[idx] = True
            starts = [i for i in range(n) if in_g0[i] and not in_g0[(i - 1) % n]]
            if len(starts) != 1:
                raise GeometryError("gamma0 is not a contiguous chain of segments")
        s = starts[0]
        run = [s]
        while len(run) < len(idx):
            run.append((run[-1] + 1) % n)
        if sorted(run) != sorted(idx.tolist()):
            raise GeometryError("gamma0 is not a contiguous chain of segments")
        pts = [self.vertices[run[0]]]
        for i in run:
            pts.append(self.vertices[(i + 1) % n])
        return np.array(pts)


# -- hypothesis checks -----------------------------------------------------


def check_star_shaped(geometry, tol=1e-12):
    """Check ``(x - x0) . nu <= 0`` on gamma0.

    Returns ``{"holds": bool, "max_violation": float}`` where the
    violation is the maximum of ``(x - x0) . nu`` over gamma0 (the
    expression is linear per segment, so segment endpoints suffice).
    Empty gamma0 holds trivially with ``max_violation = -inf``.
    """
    idx = geometry.segments_with_tag(GAMMA0)
    if len(idx) == 0:
        return {"holds": True, "max_violation": -np.inf}
    worst = -np.inf
    for i in idx:
        nu = geometry.segment_normal(i)
        if geometry.dimension == 1:
            vals = [(geometry.segment_coords(i) - geometry.x0[0]) * nu[0]]
        else:
            a, b = geometry.segment_coords(i)
            vals = [(a - geometry.x0) @ nu, (b - geometry.x0) @ nu]
        worst = max(worst, float(max(vals)))
    return {"holds": worst <= tol, "max_violation": worst}


def check_convex_gamma0(geometry, tol=1e-12):
    """Discrete convexity of the gamma0 chain (turn-sign test).

    Along the ccw-ordered chain every pair of consecutive edges must turn
    left (cross product >= 0 up to ``tol``), i.e. gamma0 bulges away from
    the domain interior.  Flat (single-segment) chains and 1D endpoints
    are convex by convention.
    """
    if geometry.dimension == 1:
        return {"convex": True, "min_turn": np.inf}
    chain = geometry.gamma0_chain()
    if len(chain) < 3:
        return {"convex": True, "min_turn": np.inf}
    closed = np.allclose(chain[0], chain[-1])
    pts = chain[:-1] if closed else chain
    edges = np.diff(chain, axis=0)
    if closed:
        edges = np.vstack([edges, chain[1] - chain[0]])
    min_turn = np.inf
    for k in range(len(edges) - 1):
        e0, e1 = edges[k], edges[k + 1]
        cr = (e0[0] * e1[1] - e0[1] * e1[0]) / (np.linalg.norm(e0) * np.linalg.norm(e1))
        min_turn = min(min_turn, float(cr))
    del pts
    return {"convex": min_turn >= -tol, "min_turn": min_turn}


# -- analytic field backends ----------------------------------------------


# cubic cutoff: C^2 across the collar edge t = 1 (so grad(div h) stays
# continuous, which keeps low-order quadrature of the identities at
# second order), with psi'(0) != 0 so the trace correction is active.
def _psi(t):
    t = np.asarray(t, float)
    return np.where(t < 1.0, (1.0 - t) ** 3, 0.0)


def _dpsi(t):
    t = np.asarray(t, float)
    return np.where(t < 1.0, -3.0 * (1.0 - t) ** 2, 0.0)


def _ddpsi(t):
    t = np.asarray(t, float)
    return np.where(t < 1.0, 6.0 * (1.0 - t), 0.0)


class RadialField:
    """``h(x) = x - x0``: identity Jacobian, constant divergence."""

    def __init__(self, x0):
        self.x0 = np.atleast_1d(np.asarray(x0, float))
        self.dim = len(self.x0)

    def __call__(self, x):
        return np.atleast_2d(np.asarray(x, float)) - self.x0

    def jacobian(self, x):
        n = len(np.atleast_2d(x))
        return np.broadcast_to(np.eye(self.dim), (n, self.dim, self.dim)).copy()

    def divergence(self, x):
        return np.full(len(np.atleast_2d(x)), float(self.dim))

    def grad_divergence(self, x):
        return np.zeros((len(np.atleast_2d(x)), self.dim))


class IntervalCollarField:
    """1D bent radial field for a single gamma0 endpoint.

    ``h(x) = (x - x0) - psi(d / delta) * beta * nu`` with ``d`` the
    distance to the gamma0 endpoint ``a``, ``nu`` its outward direction
    and ``beta = (a - x0) * nu <= 0`` under the star-shape condition;
    then ``h' >= 1`` everywhere and ``h(a) = 0``.
    """

    dim = 1

    def __init__(self, x0, anchor, nu, delta):
        self.x0 = float(np.atleast_1d(x0)[0])
        self.anchor = float(np.atleast_1d(anchor)[0])
        self.nu = float(nu)
        self.delta = float(delta)
        self.beta = (self.anchor - self.x0) * self.nu

    def _d(self, x):
        return -self.nu * (x - self.anchor)

    def __call__(self, x):
        x = np.asarray(x, float).reshape(-1)
        d = self._d(x)
        h = (x - self.x0) - _psi(d / self.delta) * self.beta * self.nu
        return h[:, None]

    def jacobian(self, x):
        x = np.asarray(x, float).reshape(-1)
        d = self._d(x)
        hp = 1.0 + (self.beta / self.delta) * _dpsi(d / self.delta)
        return hp[:, None, None]

    def divergence(self, x):
        return self.jacobian(x)[:, 0, 0]

    def grad_divergence(self, x):
        x = np.asarray(x, float).reshape(-1)
        d = self._d(x)
        gd = -(self.beta / self.delta**2) * _ddpsi(d / self.delta) * self.nu
        return gd[:, None]


class FlatCollarField:
    """2D bent radial field for a flat (collinear) gamma0 chain.

    Inside the strip over the segment the correction is
    ``psi(d / delta) * beta0 * nu`` with constant ``beta0 = (a - x0) . nu``;
    past the segment ends the foot point clamps to the end vertex and the
    correction freezes.  All derivatives are closed-form.
    """

    dim = 2

    def __init__(self, x0, a, b, nu, delta):
        self.x0 = np.asarray(x0, float)
        self.a = np.asarray(a, float)
        self.b = np.asarray(b, float)
        self.nu = np.asarray(nu, float)
        self.delta = float(delta)
        t = self.b - self.a
        self.length = float(np.linalg.norm(t))
        self.tangent = t / self.length
        self.beta0 = float((self.a - self.x0) @ self.nu)

    def _project(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        s = (x - self.a) @ self.tangent
        s_cl = np.clip(s, 0.0, self.length)
        p = self.a + s_cl[:, None] * self.tangent
        dvec = x - p
        d = np.linalg.norm(dvec, axis=1)
        # unit direction from foot point; fall back to -nu on the chain itself
        u = np.where(d[:, None] > 1e-14, dvec / np.maximum(d, 1e-300)[:, None], -self.nu)
        interior = (s > 0.0) & (s < self.length) & (d > 1e-14)
        return x, d, u, interior

    def __call__(self, x):
        x, d, _, _ = self._project(x)
        return (x - self.x0) - _psi(d / self.delta)[:, None] * self.beta0 * self.nu

    def jacobian(self, x):
        x, d, u, _ = self._project(x)
        # grad d = u (exact for the distance to a convex segment)
        coef = (_dpsi(d / self.delta) / self.delta) * self.beta0
        return np.eye(2) - coef[:, None, None] * self.nu[:, None] * u[:, None, :]

    def divergence(self, x):
        x, d, u, _ = self._project(x)
        return 2.0 - (_dpsi(d / self.delta) / self.delta) * self.beta0 * (u @ self.nu)

    def grad_divergence(self, x):
        x, d, u, interior = self._project(x)
        n = len(x)
        out = np.zeros((n, 2))
        dp = _dpsi(d / self.delta)
        ddp = _ddpsi(d / self.delta)
        nu_u = u @ self.nu
        # first piece: -(beta0 / delta^2) psi'' (nu . grad d) grad d
        out += -(self.beta0 / self.delta**2) * (ddp * nu_u)[:, None] * u
        # second piece: -(beta0 / delta) psi' hess(d) nu ; hess(d) vanishes in
        # the strip (d is linear there) and is (I - u u^T)/d in the end fans
        fan = ~interior & (d > 1e-14)
        if np.any(fan):
            hn = (self.nu - nu_u[fan, None] * u[fan]) / d[fan, None]
            out[fan] += -(self.beta0 / self.delta) * dp[fan, None] * hn
        return out


class ShiftedField:
    """``h + v`` for a constant vector ``v`` (derivatives unchanged)."""

    def __init__(self, base, shift):
        self.base = base
        self.shift = np.asarray(shift, float)
        self.dim = base.dim

    def __call__(self, x):
        return self.base(x) + self.shift

    def jacobian(self, x):
        return self.base.jacobian(x)

    def divergence(self, x):
        return self.base.divergence(x)

    def grad_divergence(self, x):
        return self.base.grad_divergence(x)


class _CurvedCollarField:
    """Bent radial field over a curved gamma0 polyline (values only).

    Uses the nearest point on the chain and arclength-interpolated vertex
    normals, so the correction is continuous across the foot-point
    bisector rays; derivatives are certified discretely, not in closed
    form.
    """

    dim = 2

    def __init__(self, x0, chain, delta):
        self.x0 = np.asarray(x0, float)
        self.chain = np.asarray(chain, float)
        self.delta = float(delta)
        edges = np.diff(self.chain, axis=0)
        lens = np.linalg.norm(edges, axis=1)
        self.facet_nu = np.column_stack([edges[:, 1], -edges[:, 0]]) / lens[:, None]
        vnu = np.zeros_like(self.chain)
        vnu[0] = self.facet_nu[0]
        vnu[-1] = self.facet_nu[-1]
        for i in range(1, len(self.chain) - 1):
            v = self.facet_nu[i - 1] + self.facet_nu[i]
            vnu[i] = v / np.linalg.norm(v)
        self.vertex_nu = vnu
        self.edge_len = lens

    def _foot(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        a = self.chain[:-1]
        e = np.diff(self.chain, axis=0)
        ee = np.sum(e * e, axis=1)
        # (nq, nfacet) local coordinates of the per-facet projections
        theta = np.clip(((x[:, None, :] - a) * e).sum(-1) / ee, 0.0, 1.0)
        p = a + theta[:, :, None] * e
        d2 = np.sum((x[:, None, :] - p) ** 2, axis=-1)
        j = np.argmin(d2, axis=1)
        rows = np.arange(len(x))
        return p[rows, j], np.sqrt(d2[rows, j]), theta[rows, j], j

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        p, d, theta, j = self._foot(x)
        nu = (1.0 - theta)[:, None] * self.vertex_nu[j] + theta[:, None] * self.vertex_nu[j + 1]
        nu /= np.linalg.norm(nu, axis=1)[:, None]
        beta = np.sum((p - self.x0) * nu, axis=1)
        return (x - self.x0) - (_psi(d / self.delta) * beta)[:, None] * nu


# -- the certified field ---------------------------------------------------


@dataclass
class VectorFieldH:
    """Multiplier vector field with its certification data.

    ``nodal_values`` carry the field over the mesh; gamma0 facet
    quadrature values are stored separately with the facet-normal
    component removed exactly, which is what the tangentiality
    certificate is measured on.  ``analytic`` (when present) provides
    closed-form ``jacobian`` / ``divergence`` / ``grad_divergence``
    callables for quadrature-based identity checks.
    """

    nodal_values: np.ndarray
    gamma0_facet_index: np.ndarray
    gamma0_facet_values: np.ndarray
    collar_width: float
    x0: np.ndarray
    analytic: object = None
    certified_c0: float = field(default=None)
    max_normal_trace_on_gamma0: float = field(default=None)

    @property
    def certified(self):
        return (
            self.certified_c0 is not None
            and self.certified_c0 > 0
            and self.max_normal_trace_on_gamma0 is not None
        )

    @classmethod
    def from_nodal(cls, mesh, values, collar_width=0.0, x0=None, analytic=None):
        """Wrap raw nodal values (used for synthetic fields in tests)."""
        values = np.asarray(values, float).reshape(mesh.n_nodes, mesh.dim)
        g0 = mesh.gamma0_facets
        qp, _ = mesh.facet_quadrature()
        vals = np.empty((len(g0), qp.shape[1], mesh.dim))
        for k, f in enumerate(g0):
            fv = values[mesh.facets[f]]
            if mesh.dim == 1:
                vals[k] = fv
            else:
                # linear interpolation of nodal values at the facet points
                a, b = mesh.nodes[mesh.facets[f][0]], mesh.nodes[mesh.facets[f][1]]
                t = ((qp[f] - a) @ (b - a)) / np.sum((b - a) ** 2)
                vals[k] = (1 - t)[:, None] * fv[0] + t[:, None] * fv[1]
        x0 = np.zeros(mesh.dim) if x0 is None else np.asarray(x0, float)
        return cls(values, g0.copy(), vals, collar_width, x0, analytic)


def verify_field_properties(h, mesh):
    """Measure the two certified properties of a multiplier field.

    Returns ``{"c0": ..., "max_normal_trace": ...}`` where ``c0`` is the
    minimum over elements of the smallest eigenvalue of the symmetric
    part of the discrete (per-element) Jacobian of the nodal values, and
    the trace is the maximum of ``|h . nu|`` over gamma0 facet quadrature
    points.
    """
    vals = h.nodal_values
    J = np.einsum("eai,eak->eik", mesh.element_gradients, vals[mesh.elements])
    if mesh.dim == 1:
        c0 = float(J[:, 0, 0].min())
    else:
        a, b, c = J[:, 0, 0], 0.5 * (J[:, 0, 1] + J[:, 1, 0]), J[:, 1, 1]
        lam = 0.5 * (a + c) - np.sqrt((0.5 * (a - c)) ** 2 + b**2)
        c0 = float(lam.min())
    if len(h.gamma0_facet_index) == 0:
        trace = 0.0
    else:
        nu = mesh.facet_normals[h.gamma0_facet_index]
        trace = float(np.abs(np.einsum("fqi,fi->fq", h.gamma0_facet_values, nu)).max())
    return {"c0": c0, "max_normal_trace": trace}


def build_vector_field_h(geometry, mesh, collar_width, trace_tol=1e-10):
    """Construct and certify the bent radial multiplier field.

    The field equals ``x - x0`` outside a collar of width
    ``collar_width`` around gamma0; inside, the component along the
    (interpolated) gamma0 normal at the foot point is blended out with a
    ``(1 - t)^2`` cutoff in the distance to gamma0, so the trace on
    gamma0 is tangential.  Gamma0 facet quadrature values additionally
    have the exact facet-normal component removed.

    Raises ``GeometryError`` if the star-shape or convexity hypothesis
    fails and ``CertificationError`` if the built field does not certify.
    """
    star = check_star_shaped(geometry)
    if not star["holds"]:
        raise GeometryError(
            "gamma0 is not star-shaped with respect to x0 "
            "(max violation %.3e)" % star["max_violation"]
        )
    convex = check_convex_gamma0(geometry)
    if not convex["convex"]:
        raise GeometryError("gamma0 chain is not convex (min turn %.3e)" % convex["min_turn"])
    if not 0 < collar_width < geometry.diameter():
        raise GeometryError("collar_width must lie in (0, domain diameter)")

    chain = geometry.gamma0_chain()
    if geometry.dimension == 1:
        if len(chain) == 0:
            fld = RadialField(geometry.x0)
        else:
            i = geometry.segments_with_tag(GAMMA0)[0]
            fld = IntervalCollarField(
                geometry.x0, chain[0], geometry.segment_normal(i)[0], collar_width
            )
    elif len(chain) == 0:
        fld = RadialField(geometry.x0)
    else:
        edges = np.diff(chain, axis=0)
        flat = True
        for k in range(len(edges) - 1):
            cr = edges[k, 0] * edges[k + 1, 1] - edges[k, 1] * edges[k + 1, 0]
            if abs(cr) > 1e-12 * np.linalg.norm(edges[k]) * np.linalg.norm(edges[k + 1]):
                flat = False
                break
        if flat:
            i = geometry.segments_with_tag(GAMMA0)[0]
            fld = FlatCollarField(
                geometry.x0, chain[0], chain[-1], geometry.segment_normal(i), collar_width
            )
        else:
            fld = _CurvedCollarField(geometry.x0, chain, collar_width)

    nodal = fld(mesh.nodes)
    g0 = mesh.gamma0_facets
    qp, _ = mesh.facet_quadrature()
    facet_vals = np.empty((len(g0), qp.shape[1], mesh.dim))
    for k, f in enumerate(g0):
        v = fld(qp[f])
        nu = mesh.facet_normals[f]
        facet_vals[k] = v - np.outer(v @ nu, nu)

    analytic = fld if not isinstance(fld, _CurvedCollarField) else None
    out = VectorFieldH(
        nodal, g0.copy(), facet_vals, float(collar_width), geometry.x0.copy(), analytic
    )
    report = verify_field_properties(out, mesh)
    out.certified_c0 = report["c0"]
    out.max_normal_trace_on_gamma0 = report["max_normal_trace"]
    if report["c0"] <= 0 or report["max_normal_trace"] > trace_tol:
        raise CertificationError(
            "field certification failed: c0=%.6e, max |h.nu| on gamma0=%.3e"
            % (report["c0"], report["max_normal_trace"]),
            report=report,
        )
    return out
