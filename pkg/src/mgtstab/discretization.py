"""Meshes, finite-element operator assembly and the harmonic-extension map.

Piecewise-linear conforming elements on interval or triangle meshes.  The
assembled bundle realizes the Laplacian with a Robin condition
(coefficient ``kappa0``) on gamma0 and a Neumann condition on gamma1:
``Ktilde = K + B0`` is the discrete form of that operator, so that
``x^T Ktilde y = (grad x, grad y) + int_{gamma0} kappa0 x y`` exactly for
nodal data.  All local integrals of piecewise-linear weights are done
with closed simplex formulas, so there is no quadrature error at this
polynomial degree.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import GeometryError, IllPosedMapError, MeshError
from .geometry import GAMMA0, GAMMA1


class Mesh:
    """Conforming simplex mesh with tagged boundary facets.

    Attributes
    ----------
    dim : int
    nodes : ndarray, shape (n_nodes, dim)
    elements : ndarray of int, shape (n_elements, dim + 1)
    facets : ndarray of int, shape (n_facets, dim)
        Boundary facets (points in 1D, edges in 2D, stored in boundary
        traversal order).
    facet_tags : ndarray of int
        GAMMA0 / GAMMA1 per facet.
    """

    def __init__(self, dim, nodes, elements, facets, facet_tags, facet_normals=None):
        self.dim = int(dim)
        self.nodes = np.asarray(nodes, float).reshape(-1, self.dim)
        self.elements = np.asarray(elements, dtype=np.int64).reshape(-1, self.dim + 1)
        self.facets = np.asarray(facets, dtype=np.int64).reshape(-1, self.dim)
        self.facet_tags = np.asarray(facet_tags, dtype=np.int8)
        self._setup_geometry(facet_normals)

    def _setup_geometry(self, facet_normals):
        x = self.nodes[self.elements]
        if self.dim == 1:
            h = x[:, 1, 0] - x[:, 0, 0]
            if np.any(h <= 0):
                raise MeshError("1D elements must be positively oriented")
            self.element_volumes = h
            g = np.empty((len(self.elements), 2, 1))
            g[:, 0, 0] = -1.0 / h
            g[:, 1, 0] = 1.0 / h
            self.element_gradients = g
        else:
            d1 = x[:, 1] - x[:, 0]
            d2 = x[:, 2] - x[:, 0]
            det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            if np.any(det <= 0):
                raise MeshError("triangles must be positively oriented")
            self.element_volumes = 0.5 * det
            # gradients of the three barycentric basis functions
            g = np.empty((len(self.elements), 3, 2))
            g[:, 1, 0] = d2[:, 1] / det
            g[:, 1, 1] = -d2[:, 0] / det
            g[:, 2, 0] = -d1[:, 1] / det
            g[:, 2, 1] = d1[:, 0] / det
            g[:, 0] = -g[:, 1] - g[:, 2]
            self.element_gradients = g
        if self.dim == 1:
            self.facet_measures = np.ones(len(self.facets))
            if facet_normals is None:
                raise MeshError("1D meshes need explicit facet normals")
            self.facet_normals = np.asarray(facet_normals, float).reshape(-1, 1)
        else:
            a = self.nodes[self.facets[:, 0]]
            b = self.nodes[self.facets[:, 1]]
            e = b - a
            L = np.linalg.norm(e, axis=1)
            if np.any(L < 1e-14):
                raise MeshError("degenerate boundary facet")
            self.facet_measures = L
            self.facet_normals = np.column_stack([e[:, 1], -e[:, 0]]) / L[:, None]

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def gamma0_facets(self):
        return np.flatnonzero(self.facet_tags == GAMMA0)

    @property
    def gamma1_facets(self):
        return np.flatnonzero(self.facet_tags == GAMMA1)

    def nodes_on(self, tag):
        return np.unique(self.facets[self.facet_tags == tag])

    def mesh_size(self):
        """Maximum element diameter."""
        if self.dim == 1:
            return float(self.element_volumes.max())
        x = self.nodes[self.elements]
        e01 = np.linalg.norm(x[:, 1] - x[:, 0], axis=1)
        e12 = np.linalg.norm(x[:, 2] - x[:, 1], axis=1)
        e20 = np.linalg.norm(x[:, 0] - x[:, 2], axis=1)
        return float(np.max([e01, e12, e20]))

    def facet_quadrature(self):
        """Two-point Gauss points per facet: (points, weights).

        Points have shape ``(n_facets, nq, dim)``; in 1D each facet is a
        single point with weight one.
        """
        if self.dim == 1:
            pts = self.nodes[self.facets[:, 0]][:, None, :]
            w = np.ones((len(self.facets), 1))
            return pts, w
        a = self.nodes[self.facets[:, 0]]
        b = self.nodes[self.facets[:, 1]]
        t0 = 0.5 - 0.5 / np.sqrt(3.0)
        t1 = 0.5 + 0.5 / np.sqrt(3.0)
        pts = np.stack([a + t0 * (b - a), a + t1 * (b - a)], axis=1)
        w = 0.5 * self.facet_measures[:, None] * np.ones((1, 2))
        return pts, w

    def element_quadrature(self, rule="vertex"):
        """Element quadrature points/weights for closed-form integrands.

        1D rules: ``trapezoid`` (order 2) and ``simpson`` (order 4).
        2D rules: ``vertex`` (order 2) and ``centroid`` (order 2).
        """
        x = self.nodes[self.elements]
        vol = self.element_volumes
        if self.dim == 1:
            if rule == "trapezoid":
                return x, np.column_stack([vol / 2, vol / 2])
            if rule == "simpson":
                mid = 0.5 * (x[:, 0] + x[:, 1])
                pts = np.stack([x[:, 0], mid, x[:, 1]], axis=1)
                w = np.column_stack([vol / 6, 4 * vol / 6, vol / 6])
                return pts, w
            raise ValueError("unknown 1D rule %r" % rule)
        if rule == "vertex":
            return x, np.repeat(vol[:, None] / 3.0, 3, axis=1)
        if rule == "centroid":
            return x.mean(axis=1)[:, None, :], vol[:, None]
        raise ValueError("unknown 2D rule %r" % rule)


def _is_axis_aligned_rectangle(vertices):
    if len(vertices) != 4:
        return False
    e = np.roll(vertices, -1, axis=0) - vertices
    for k in range(4):
        if not (abs(e[k, 0]) < 1e-14 or abs(e[k, 1]) < 1e-14):
            return False
    return True


def build_mesh(geometry, resolution):
    """Mesh a validated geometry.

    1D: ``resolution`` uniform elements.  2D: axis-aligned rectangles get
    a ``resolution x resolution`` tensor grid split into triangles
    (2 * resolution^2 elements); general polygons are fanned from the
    vertex centroid and each coarse triangle is subdivided into
    ``resolution^2`` similar children, so each boundary segment
    contributes exactly ``resolution`` facets.
    """
    resolution = int(resolution)
    if resolution < 2:
        raise MeshError("resolution must be at least 2")
    if geometry.dimension == 1:
        xl, xr = geometry.vertices
        nodes = np.linspace(xl, xr, resolution + 1)[:, None]
        elements = np.column_stack([np.arange(resolution), np.arange(1, resolution + 1)])
        facets = np.array([[0], [resolution]])
        tags = geometry.segment_tags.copy()
        normals = np.array([[-1.0], [1.0]])
        return Mesh(1, nodes, elements, facets, tags, facet_normals=normals)

    verts = geometry.vertices
    if _is_axis_aligned_rectangle(verts):
        return _rectangle_mesh(geometry, resolution)
    return _fan_mesh(geometry, resolution)


def _rectangle_mesh(geometry, n):
    v = geometry.vertices
    xmin, ymin = v.min(axis=0)
    xmax, ymax = v.max(axis=0)
    xs = np.linspace(xmin, xmax, n + 1)
    ys = np.linspace(ymin, ymax, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            sw, se, ne, nw = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            elements.append([sw, se, ne])
            elements.append([sw, ne, nw])

    # walk the four sides in ccw order and tag facets by the geometry
    # segment each side corresponds to
    corner_ids = {
        (xmin, ymin): nid(0, 0),
        (xmax, ymin): nid(n, 0),
        (xmax, ymax): nid(n, n),
        (xmin, ymax): nid(0, n),
    }
    side_nodes = {
        (corner_ids[(xmin, ymin)], corner_ids[(xmax, ymin)]): [nid(i, 0) for i in range(n + 1)],
        (corner_ids[(xmax, ymin)], corner_ids[(xmax, ymax)]): [nid(n, j) for j in range(n + 1)],
        (corner_ids[(xmax, ymax)], corner_ids[(xmin, ymax)]): [nid(i, n) for i in range(n, -1, -1)],
        (corner_ids[(xmin, ymax)], corner_ids[(xmin, ymin)]): [nid(0, j) for j in range(n, -1, -1)],
    }
    facets, tags = [], []
    for k in range(4):
        a = tuple(geometry.vertices[k])
        b = tuple(geometry.vertices[(k + 1) % 4])
        key = (corner_ids[a], corner_ids[b])
        if key not in side_nodes:
            raise GeometryError("rectangle vertices are not in ccw order")
        chain = side_nodes[key]
        for i in range(n):
            facets.append([chain[i], chain[i + 1]])
            tags.append(geometry.segment_tags[k])
    return Mesh(2, nodes, np.array(elements), np.array(facets), np.array(tags))


def _fan_mesh(geometry, r):
    verts = geometry.vertices
    center = verts.mean(axis=0)
    node_ids = {}
    nodes = []

    def nid(p):
        key = (round(p[0], 12), round(p[1], 12))
        if key not in node_ids:
            node_ids[key] = len(nodes)
            nodes.append([key[0], key[1]])
        return node_ids[key]

    elements = []
    facets, tags = [], []
    n = len(verts)
    for k in range(n):
        A, B = verts[k], verts[(k + 1) % n]
        # lattice over triangle (center, A, B); outer edge A -> B follows
        # the polygon traversal so facet orientation matches the boundary
        P = center
        cr = (A[0] - P[0]) * (B[1] - P[1]) - (A[1] - P[1]) * (B[0] - P[0])
        if cr <= 0:
            raise MeshError("polygon is not star-shaped about its vertex centroid")
        ids = {}
        for i in range(r + 1):
            for j in range(r + 1 - i):
                p = P + (i / r) * (A - P) + (j / r) * (B - P)
                ids[(i, j)] = nid(p)
        for i in range(r):
            for j in range(r - i):
                elements.append([ids[(i, j)], ids[(i + 1, j)], ids[(i, j + 1)]])
                if i + j < r - 1:
                    elements.append([ids[(i + 1, j)], ids[(i + 1, j + 1)], ids[(i, j + 1)]])
        # outer edge: points with i + j = r, running from A (i=r) to B (j=r)
        chain = [ids[(r - m, m)] for m in range(r + 1)]
        for m in range(r):
            facets.append([chain[m], chain[m + 1]])
            tags.append(geometry.segment_tags[k])
    return Mesh(2, np.array(nodes), np.array(elements), np.array(facets), np.array(tags))


# -- material data ---------------------------------------------------------


@dataclass
class MaterialParams:
    """Coefficients of the third-order model, sampled at mesh nodes.

    ``gamma_field = alpha_field - tau * c^2 / b`` is the stability
    parameter; its sign is reported, not enforced (negative values are
    supported on purpose for instability studies).
    """

    tau: float
    c: float
    b: float
    alpha_field: np.ndarray
    kappa0_field: np.ndarray
    kappa1_field: np.ndarray

    def __post_init__(self):
        for name in ("tau", "c", "b"):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be strictly positive" % name)
        self.alpha_field = np.asarray(self.alpha_field, float)
        self.kappa0_field = np.asarray(self.kappa0_field, float)
        self.kappa1_field = np.asarray(self.kappa1_field, float)
        if np.any(self.alpha_field < 0):
            raise ValueError("alpha must be nonnegative")
        if np.any(self.kappa1_field < 0):
            raise ValueError("kappa1 must be nonnegative")

    @classmethod
    def constant(cls, mesh, tau, c, b, alpha, kappa0, kappa1):
        n = mesh.n_nodes
        return cls(
            float(tau),
            float(c),
            float(b),
            np.full(n, float(alpha)),
            np.full(n, float(kappa0)),
            np.full(n, float(kappa1)),
        )

    @property
    def gamma_field(self):
        return self.alpha_field - self.tau * self.c**2 / self.b

    @property
    def q(self):
        """The transform ratio c^2 / b (unchanged by tau-normalization)."""
        return self.c**2 / self.b

    def stability_classification(self, tol=1e-12):
        g = self.gamma_field
        if np.all(g > tol):
            return "stable"
        if np.all(np.abs(g) <= tol):
            return "critical"
        if np.any(g < -tol):
            return "unstable"
        return "marginal"

    def constant_alpha(self, tol=1e-12):
        a = self.alpha_field
        if np.ptp(a) > tol:
            raise ValueError("alpha is not spatially constant")
        return float(a[0])


# -- assembly --------------------------------------------------------------


def _assemble_weighted_mass(mesh, weights):
    """Mass matrix with a piecewise-linear nodal weight, exact quadrature."""
    rows, cols, vals = [], [], []
    conn = mesh.elements
    w = weights[conn]
    if mesh.dim == 1:
        h = mesh.element_volumes
        w1, w2 = w[:, 0], w[:, 1]
        loc = np.empty((len(conn), 2, 2))
        loc[:, 0, 0] = h / 12 * (3 * w1 + w2)
        loc[:, 0, 1] = loc[:, 1, 0] = h / 12 * (w1 + w2)
        loc[:, 1, 1] = h / 12 * (w1 + 3 * w2)
    else:
        A = mesh.element_volumes
        loc = np.empty((len(conn), 3, 3))
        for a in range(3):
            for bb in range(3):
                if a == bb:
                    others = [k for k in range(3) if k != a]
                    loc[:, a, bb] = A / 10 * w[:, a] + A / 30 * (
                        w[:, others[0]] + w[:, others[1]]
                    )
                else:
                    cc = 3 - a - bb
                    loc[:, a, bb] = A / 30 * (w[:, a] + w[:, bb]) + A / 60 * w[:, cc]
    nloc = mesh.dim + 1
    for a in range(nloc):
        for bb in range(nloc):
            rows.append(conn[:, a])
            cols.append(conn[:, bb])
            vals.append(loc[:, a, bb])
    n = mesh.n_nodes
    M = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return M.tocsr()


def _assemble_boundary_mass(mesh, tag, weights):
    """Facet mass matrix on the tagged boundary part with nodal weight."""
    n = mesh.n_nodes
    idx = np.flatnonzero(mesh.facet_tags == tag)
    if len(idx) == 0:
        return sp.csr_matrix((n, n))
    rows, cols, vals = [], [], []
    if mesh.dim == 1:
        for f in idx:
            i = mesh.facets[f, 0]
            rows.append(i)
            cols.append(i)
            vals.append(weights[i])
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    for f in idx:
        i, j = mesh.facets[f]
        L = mesh.facet_measures[f]
        w1, w2 = weights[i], weights[j]
        loc = L / 12.0 * np.array([[3 * w1 + w2, w1 + w2], [w1 + w2, w1 + 3 * w2]])
        for a, ga in enumerate((i, j)):
            for bb, gb in enumerate((i, j)):
                rows.append(ga)
                cols.append(gb)
                vals.append(loc[a, bb])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _assemble_stiffness(mesh):
    conn = mesh.elements
    g = mesh.element_gradients
    vol = mesh.element_volumes
    loc = np.einsum("eai,ebi,e->eab", g, g, vol)
    nloc = mesh.dim + 1
    rows, cols, vals = [], [], []
    for a in range(nloc):
        for bb in range(nloc):
            rows.append(conn[:, a])
            cols.append(conn[:, bb])
            vals.append(loc[:, a, bb])
    n = mesh.n_nodes
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return K.tocsr()


@dataclass
class OperatorBundle:
    """All assembled matrices for one mesh/material pair.

    ``Ktilde = Kmat + B0`` realizes the Robin-Neumann elliptic operator;
    ``T1`` is the unweighted gamma1 facet mass used by the
    harmonic-extension load and by boundary traces.
    """

    mesh: Mesh
    params: MaterialParams
    Mmat: sp.csr_matrix
    Kmat: sp.csr_matrix
    B0: sp.csr_matrix
    B1: sp.csr_matrix
    Malpha: sp.csr_matrix
    Mgamma: sp.csr_matrix
    T1: sp.csr_matrix
    Ktilde: sp.csr_matrix
    _ktilde_lu: object = field(default=None, repr=False)
    _mass_lu: object = field(default=None, repr=False)

    def ktilde_solve(self, rhs):
        if self._ktilde_lu is None:
            if self.B0.count_nonzero() == 0:
                raise IllPosedMapError(
                    "Ktilde is singular: no Robin mass on gamma0 (gamma0 empty "
                    "or kappa0 identically zero there)"
                )
            try:
                self._ktilde_lu = splu(self.Ktilde.tocsc())
            except RuntimeError as exc:
                raise IllPosedMapError("Ktilde factorization failed: %s" % exc)
        return self._ktilde_lu.solve(rhs)

    def mass_solve(self, rhs):
        if self._mass_lu is None:
            self._mass_lu = splu(self.Mmat.tocsc())
        return self._mass_lu.solve(rhs)


def assemble_operators(mesh, params):
    """Assemble the full operator bundle (exact local quadrature)."""
    n = mesh.n_nodes
    ones = np.ones(n)
    Mmat = _assemble_weighted_mass(mesh, ones)
    Kmat = _assemble_stiffness(mesh)
    B0 = _assemble_boundary_mass(mesh, GAMMA0, params.kappa0_field)
    B1 = _assemble_boundary_mass(mesh, GAMMA1, params.kappa1_field)
    T1 = _assemble_boundary_mass(mesh, GAMMA1, ones)
    Malpha = _assemble_weighted_mass(mesh, params.alpha_field)
    Mgamma = _assemble_weighted_mass(mesh, params.gamma_field)
    Ktilde = (Kmat + B0).tocsr()
    return OperatorBundle(mesh, params, Mmat, Kmat, B0, B1, Malpha, Mgamma, T1, Ktilde)


# -- harmonic extension (discrete Neumann map) -------------------------------


def solve_neumann_map(bundle, phi):
    """Discrete harmonic extension of gamma1 boundary data.

    Solves ``Ktilde psi = T1 phi`` for a full-length nodal vector ``phi``
    (values off gamma1 are ignored by the load).  This is the weak form
    of: Laplace equation in the domain, normal derivative ``phi`` on
    gamma1, homogeneous Robin condition on gamma0.
    """
    phi = np.asarray(phi, float)
    load = bundle.T1 @ phi
    return bundle.ktilde_solve(load)


def check_adjoint_identity(bundle, xi, phi):
    """Residual of the extension adjoint identity for one pair.

    Returns ``|xi^T Ktilde N(phi) - int_{gamma1} xi phi|``, which is zero
    up to linear-solver accuracy by construction of the discrete map.
    """
    psi = solve_neumann_map(bundle, phi)
    lhs = float(xi @ (bundle.Ktilde @ psi))
    rhs = float(xi @ (bundle.T1 @ phi))
    return abs(lhs - rhs)


# -- exports -----------------------------------------------------------------


def export_triplets(matrix, path):
    """Write a sparse matrix as ``row col value`` lines (sorted, 17 sig digits)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write("# row col value\n")
        for k in order:
            fh.write("%d %d %.17g\n" % (coo.row[k], coo.col[k], coo.data[k]))


def export_mesh_tables(mesh, directory):
    """Write nodes/elements/facets CSV tables into ``directory``."""
    import os

    os.makedirs(directory, exist_ok=True)
    cols = ",".join("x%d" % k for k in range(mesh.dim))
    with open(os.path.join(directory, "nodes.csv"), "w") as fh:
        fh.write("node,%s\n" % cols)
        for i, p in enumerate(mesh.nodes):
            fh.write("%d,%s\n" % (i, ",".join("%.17g" % v for v in p)))
    with open(os.path.join(directory, "elements.csv"), "w") as fh:
        fh.write("element,%s\n" % ",".join("n%d" % k for k in range(mesh.dim + 1)))
        for i, e in enumerate(mesh.elements):
            fh.write("%d,%s\n" % (i, ",".join(str(v) for v in e)))
    with open(os.path.join(directory, "facets.csv"), "w") as fh:
        names = {GAMMA0: "gamma0", GAMMA1: "gamma1"}
        fh.write("facet,%s,tag\n" % ",".join("n%d" % k for k in range(mesh.dim)))
        for i, (f, t) in enumerate(zip(mesh.facets, mesh.facet_tags)):
            fh.write("%d,%s,%s\n" % (i, ",".join(str(v) for v in f), names[int(t)]))
