"""Piecewise-linear Galerkin solver for -Laplace(u) = 1 with zero Dirichlet data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from . import barriers
from .errors import InvalidArgument, OutOfDomain, SolverFailure
from .geometry import Polygon, TriMesh, min_enclosing_ball, polygon_distance, triangulate
from .jsonio import dump17

__all__ = [
    "ScalarField",
    "assemble",
    "pcg_jacobi",
    "poisson_solve",
    "interpolate",
    "solve_sequence",
    "SequenceResult",
    "barrier_sandwich_check",
    "discretization_slack",
    "NEGATIVE_ABORT",
    "CLAMP_FLOOR",
]

NEGATIVE_ABORT = -1e-8
CLAMP_FLOOR = 1e-300


@dataclass(frozen=True)
class ScalarField:
    """Nodal values of the discrete torsion function on a mesh.

    ``residual`` is the final relative residual of the linear solve and
    ``n_clamped`` counts interior nodes whose tiny non-positive value was
    replaced by ``CLAMP_FLOOR``.
    """

    mesh: TriMesh
    values: np.ndarray
    residual: float
    h: float
    n_clamped: int = 0
    iterations: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def max(self) -> float:
        return float(self.values.max())

    def scaled(self, c: float) -> "ScalarField":
        """The field c*u on the same mesh (used for covariance checks)."""
        return ScalarField(self.mesh, c * self.values, self.residual, self.h, self.n_clamped, self.iterations)

    def to_json(self) -> dict:
        return {
            "mesh": self.mesh.to_json(),
            "values": self.values,
            "residual": self.residual,
            "h": self.h,
            "n_clamped": self.n_clamped,
            "iterations": self.iterations,
        }

    def save(self, path) -> None:
        dump17(self.to_json(), path)

    @classmethod
    def from_json(cls, d: dict) -> "ScalarField":
        return cls(
            TriMesh.from_json(d["mesh"]),
            np.asarray(d["values"], dtype=float),
            float(d["residual"]),
            float(d["h"]),
            int(d.get("n_clamped", 0)),
            int(d.get("iterations", 0)),
        )


def _gradients(mesh: TriMesh):
    """Constant gradients of the three hat functions on every triangle, shape (T, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    area2 = 2 * mesh.areas
    g = np.empty((len(p), 3, 2))
    for k in range(3):
        a = p[:, (k + 1) % 3]
        b = p[:, (k + 2) % 3]
        g[:, k, 0] = (a[:, 1] - b[:, 1]) / area2
        g[:, k, 1] = (b[:, 0] - a[:, 0]) / area2
    return g


def assemble(mesh: TriMesh):
    """Global stiffness matrix (CSR) and the exact load vector for f = 1."""
    g = _gradients(mesh)
    area = mesh.areas
    local = np.einsum("tid,tjd->tij", g, g) * area[:, None, None]
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    K = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    K.sum_duplicates()
    load = np.zeros(mesh.n_nodes)
    np.add.at(load, t.ravel(), np.repeat(area / 3.0, 3))
    return K, load


def _dot(a, b):
    # pairwise summation in a fixed order; BLAS dot may reorder across threads
    return float(np.sum(a * b))


def pcg_jacobi(A, b, rtol: float = 1e-10, maxiter: Optional[int] = None):
    """Jacobi-preconditioned conjugate gradients with deterministic reductions.

    Returns ``(x, relative_residual, iterations)``.
    """
    n = len(b)
    maxiter = 10 * n if maxiter is None else maxiter
    d = A.diagonal()
    if np.any(d <= 0):
        raise SolverFailure("stiffness matrix has a non-positive diagonal entry")
    minv = 1.0 / d
    x = np.zeros(n)
    r = b.copy()
    bnorm = np.sqrt(_dot(b, b))
    if bnorm == 0:
        return x, 0.0, 0
    z = minv * r
    p = z.copy()
    rz = _dot(r, z)
    for it in range(1, maxiter + 1):
        Ap = A @ p
        pAp = _dot(p, Ap)
        if pAp <= 0:
            raise SolverFailure("matrix is not positive definite (p^T A p <= 0)")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.sqrt(_dot(r, r)) / bnorm
        if res <= rtol:
            return x, res, it
        z = minv * r
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverFailure(f"PCG did not converge in {maxiter} iterations (residual {res:.3e})")


def poisson_solve(mesh: TriMesh, rtol: float = 1e-10) -> ScalarField:
    """Solve the Saint Venant problem on ``mesh``.

    Raises
    ------
    SolverFailure
        no interior nodes, an indefinite system, non-convergence, or an
        interior value below ``NEGATIVE_ABORT``
    """
    interior = ~mesh.boundary
    if not np.any(interior):
        raise SolverFailure("mesh has no interior nodes")
    K, load = assemble(mesh)
    idx = np.flatnonzero(interior)
    Kii = K[idx][:, idx].tocsr()
    x, res, its = pcg_jacobi(Kii, load[idx], rtol=rtol)
    if np.min(x) < NEGATIVE_ABORT:
        raise SolverFailure(f"discrete maximum principle violated: min interior value {np.min(x):.3e}")
    bad = x <= 0
    n_clamped = int(np.sum(bad))
    x = np.where(bad, CLAMP_FLOOR, x)
    u = np.zeros(mesh.n_nodes)
    u[idx] = x
    return ScalarField(mesh, u, float(res), float(mesh.h), n_clamped, int(its))


# ---------------------------------------------------------------------------
# point location


def _barycentric(mesh: TriMesh, tri, pts):
    p = mesh.nodes[mesh.triangles[tri]]
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    v0, v1, v2 = b - a, c - a, pts - a
    den = v0[:, 0] * v1[:, 1] - v1[:, 0] * v0[:, 1]
    l1 = (v2[:, 0] * v1[:, 1] - v1[:, 0] * v2[:, 1]) / den
    l2 = (v0[:, 0] * v2[:, 1] - v2[:, 0] * v0[:, 1]) / den
    return np.column_stack([1 - l1 - l2, l1, l2])


def locate(mesh: TriMesh, pts, tol: float = 1e-12):
    """Containing triangle and barycentric coordinates for every point.

    A straight walk from the triangle with the nearest centroid, with an
    exhaustive search as fallback. Points outside the mesh raise
    :class:`OutOfDomain`.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    cache = mesh._cache
    if "kdtree" not in cache:
        cache["kdtree"] = cKDTree(mesh.centroids)
    _, cur = cache["kdtree"].query(pts)
    cur = np.asarray(cur, dtype=np.int64)
    nb = mesh.neighbors
    lam = np.zeros((len(pts), 3))
    todo = np.arange(len(pts))
    found = np.zeros(len(pts), dtype=bool)
    for _ in range(int(4 * np.sqrt(len(mesh.triangles))) + 50):
        if len(todo) == 0:
            break
        L = _barycentric(mesh, cur[todo], pts[todo])
        ok = np.all(L >= -tol, axis=1)
        lam[todo[ok]] = L[ok]
        found[todo[ok]] = True
        rest = todo[~ok]
        if len(rest) == 0:
            todo = rest
            break
        k = np.argmin(L[~ok], axis=1)
        nxt = nb[cur[rest], k]
        stuck = nxt < 0
        cur[rest[~stuck]] = nxt[~stuck]
        todo = rest[~stuck]
    missing = np.flatnonzero(~found)
    if len(missing):
        all_t = np.arange(len(mesh.triangles))
        for i in missing:
            L = _barycentric(mesh, all_t, np.repeat(pts[i : i + 1], len(all_t), axis=0))
            scale = max(1.0, float(np.abs(pts[i]).max()))
            hit = np.flatnonzero(np.all(L >= -1e-10 * scale, axis=1))
            if len(hit) == 0:
                raise OutOfDomain(f"point {pts[i].tolist()} lies outside the mesh")
            cur[i] = hit[0]
            lam[i] = L[hit[0]]
    return cur, lam


def interpolate(field: ScalarField, x):
    """Barycentric-linear interpolation of ``field`` at one point or an (M, 2) array."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    tri, lam = locate(field.mesh, np.atleast_2d(arr))
    vals = np.sum(field.values[field.mesh.triangles[tri]] * lam, axis=1)
    return float(vals[0]) if single else vals


# ---------------------------------------------------------------------------
# refinement sequences


@dataclass
class SequenceResult:
    """Solutions on a sequence of meshes with extrapolated functionals."""

    fields: list
    hs: list
    functionals: Dict[str, list]
    extrapolated: Dict[str, float] = field(default_factory=dict)
    orders: Dict[str, list] = field(default_factory=dict)


def _integral_u(f: ScalarField) -> float:
    p = f.values[f.mesh.triangles]
    return float(np.sum(f.mesh.areas * p.mean(axis=1)))


def solve_sequence(
    domain: Polygon,
    h0: float,
    levels: int,
    functionals: Optional[Dict[str, Callable]] = None,
    corner_grading: float = 0.5,
    depth: int = 0,
    order: float = 2.0,
    mesher: Optional[Callable[[float], TriMesh]] = None,
) -> SequenceResult:
    """Solve on meshes of size h0, h0/2, ... and extrapolate functionals.

    ``functionals`` maps names to callables of a :class:`ScalarField`; the
    integral of u is always included. Richardson extrapolation assumes the
    given ``order``; observed orders come from consecutive triples.
    """
    if levels < 2:
        raise InvalidArgument("levels must be at least 2")
    funcs = {"integral_u": _integral_u}
    funcs.update(functionals or {})
    fields, hs = [], []
    vals: Dict[str, list] = {k: [] for k in funcs}
    for k in range(levels):
        h = h0 / 2**k
        mesh = mesher(h) if mesher is not None else triangulate(domain, h, corner_grading, depth)
        f = poisson_solve(mesh)
        fields.append(f)
        hs.append(h)
        for name, fn in funcs.items():
            vals[name].append(float(fn(f)))
    extrap, orders = {}, {}
    for name, v in vals.items():
        extrap[name] = v[-1] + (v[-1] - v[-2]) / (2**order - 1)
        obs = []
        for i in range(len(v) - 2):
            d1, d2 = v[i + 1] - v[i], v[i + 2] - v[i + 1]
            obs.append(float(np.log2(abs(d1 / d2))) if d2 != 0 and d1 != 0 else float("nan"))
        orders[name] = obs
    return SequenceResult(fields, hs, vals, extrap, orders)


# ---------------------------------------------------------------------------
# barrier comparisons


def discretization_slack(h: float) -> float:
    """Pointwise comparison budget 5 h^2 log(1/h)."""
    return 5 * h * h * np.log(1.0 / h)


def _corner_frame(poly: Polygon, i: int):
    v = poly.vertices
    n = len(v)
    p = v[i]
    e_in = v[(i - 1) % n] - p
    e_out = v[(i + 1) % n] - p
    a_out = np.arctan2(e_out[1], e_out[0])
    a_in = np.arctan2(e_in[1], e_in[0])
    interior = float(poly.interior_angles[i])
    # counter-clockwise loop: the interior is swept from e_out to e_in
    bis = a_out + interior / 2
    return p, a_out, bis, interior


def barrier_sandwich_check(field: ScalarField, corner, theta: Optional[float] = None, r: float = 0.25,
                           n_rho: int = 24, n_omega: int = 24, poly: Optional[Polygon] = None) -> dict:
    """Compare u_h with sector, wedge and disk barriers near a polygon corner.

    ``corner`` is a vertex index of the meshed polygon (or its coordinates).
    The sector of half-aperture ``theta`` (default: half the interior angle)
    and radius ``r`` is placed at that corner along the bisector; it must lie
    inside the domain.

    Reported quantities (slack = 5 h^2 log(1/h)):

    * ``lower_gap``: min of u_h - v_{theta,r} over sampled sector points
    * ``wedge_gap``: min of W - u_h for the wedge supersolution, when the
      interior angle is below pi/2 and the polygon is convex
    * ``disk_gap``: min of D - u_h for the circumscribed-disk supersolution
    """
    poly = poly if poly is not None else field.mesh.domain
    if poly is None:
        raise InvalidArgument("the field carries no polygon; pass poly explicitly")
    if np.ndim(corner) == 0:
        i = int(corner)
        if not (0 <= i < len(poly)):
            raise InvalidArgument(f"corner index {i} out of range")
    else:
        c = np.asarray(corner, dtype=float)
        d = np.linalg.norm(poly.vertices - c, axis=1)
        if d.min() > 1e-12 * poly.diameter:
            raise InvalidArgument("the given point is not a boundary corner of the domain")
        i = int(np.argmin(d))
    p, a_out, bis, interior = _corner_frame(poly, i)
    half = interior / 2
    theta = half if theta is None else float(theta)
    if theta > half * (1 + 1e-12) or theta >= np.pi:
        raise InvalidArgument("sector aperture exceeds the corner's interior angle")
    # containment: sample the sector boundary and make sure no other vertex intrudes
    arc = bis + np.linspace(-theta, theta, 257)
    arc_pts = p + r * np.column_stack([np.cos(arc), np.sin(arc)])
    tol = 1e-9 * poly.diameter
    inside = poly.contains(arc_pts) | (polygon_distance(poly, arc_pts) <= tol)
    others = np.delete(poly.vertices, i, axis=0)
    rel = others - p
    rho_o = np.linalg.norm(rel, axis=1)
    om_o = np.angle(np.exp(1j * (np.arctan2(rel[:, 1], rel[:, 0]) - bis)))
    intrude = (rho_o < r * (1 - 1e-12)) & (np.abs(om_o) < theta)
    if not np.all(inside) or np.any(intrude):
        raise InvalidArgument("sector S_{theta,r} at this corner is not contained in the domain")

    rho = r * (np.arange(1, n_rho + 1) / (n_rho + 1))
    om = theta * (2 * (np.arange(1, n_omega + 1) / (n_omega + 1)) - 1)
    R, W = np.meshgrid(rho, om, indexing="ij")
    R, W = R.ravel(), W.ravel()
    pts = p + np.column_stack([R * np.cos(bis + W), R * np.sin(bis + W)])
    uh = interpolate(field, pts)
    v = barriers.sector_barrier(theta, r, R, W)
    slack = discretization_slack(field.h)
    report = {
        "corner": i,
        "theta": theta,
        "r": r,
        "slack": float(slack),
        "n_points": int(len(pts)),
        "lower_gap": float(np.min(uh - v)),
    }
    report["lower_ok"] = bool(report["lower_gap"] >= -slack)

    if interior < np.pi / 2 and poly.is_convex():
        # local frame: first leg along +x, interior above it
        ang = W + bis - a_out
        xl, yl = R * np.cos(ang), R * np.sin(ang)
        wv = barriers.triangle_barrier(interior, xl, yl)
        report["wedge_gap"] = float(np.min(wv - uh))
        report["wedge_ok"] = bool(report["wedge_gap"] >= -slack)
    else:
        report["wedge_gap"] = None
        report["wedge_ok"] = None

    xc, Rc = min_enclosing_ball(poly.vertices)
    dv = (Rc * Rc - np.sum((pts - xc) ** 2, axis=1)) / 4.0
    report["disk_gap"] = float(np.min(dv - uh))
    report["disk_ok"] = bool(report["disk_gap"] >= -slack)
    report["ok"] = bool(report["lower_ok"] and report["disk_ok"] and report["wedge_ok"] is not False)
    return report
