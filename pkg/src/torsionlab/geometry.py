"""Planar domains, distance to the boundary, meshing and convex descriptors.

Domains are simple polygons stored counter-clockwise. Curved boundaries
(disks, circular arcs, cusp walls, power curves) are represented by
polygonal approximations with an explicit resolution parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import triangle as tr
from scipy.optimize import linprog

from .errors import InvalidArgument, MeshingFailure, NotConvex

__all__ = [
    "Polygon",
    "SectorSpec",
    "CuspProfile",
    "TriMesh",
    "make_regular_polygon",
    "make_sector",
    "make_disk",
    "make_rectangle",
    "make_curvilinear_triangle",
    "make_cusp_domain",
    "polygon_distance",
    "triangulate",
    "triangulate_graph",
    "convex_descriptors",
    "min_enclosing_ball",
    "max_admissible_radius",
    "domain_from_json",
]


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p, q):
    """Pairwise proper-intersection test between the edge lists ``p`` and ``q``."""
    a0, a1 = p[:, None, 0], p[:, None, 1]
    b0, b1 = q[None, :, 0], q[None, :, 1]

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (
            v[..., 1] - u[..., 1]
        ) * (w[..., 0] - u[..., 0])

    d1 = orient(b0, b1, a0)
    d2 = orient(b0, b1, a1)
    d3 = orient(a0, a1, b0)
    d4 = orient(a0, a1, b1)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counter-clockwise vertex loop.

    Clockwise input is reversed on construction; everything else that
    violates simplicity raises :class:`InvalidArgument`.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidArgument("a polygon needs at least 3 two-dimensional vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("vertex coordinates must be finite")
        step = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        scale = max(float(np.ptp(v, axis=0).max()), 1e-300)
        if np.any(step <= 1e-14 * scale):
            raise InvalidArgument("consecutive vertices coincide")
        area = _signed_area(v)
        if abs(area) <= 1e-14 * scale**2:
            raise InvalidArgument("polygon has zero area")
        if area < 0:
            v = v[::-1].copy()
        n = len(v)
        if n > 3:
            edges = np.stack([v, np.roll(v, -1, axis=0)], axis=1)
            hit = _segments_cross(edges, edges)
            idx = np.arange(n)
            adjacent = (np.abs(idx[:, None] - idx[None, :]) <= 1) | (
                np.abs(idx[:, None] - idx[None, :]) == n - 1
            )
            if np.any(hit & ~adjacent):
                raise InvalidArgument("polygon edges cross (not simple)")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    @property
    def edges(self) -> np.ndarray:
        """Array of shape (n, 2, 2): edge i runs from vertex i to vertex i+1."""
        v = self.vertices
        return np.stack([v, np.roll(v, -1, axis=0)], axis=1)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.edge_lengths))

    @property
    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    @property
    def diameter(self) -> float:
        v = self.vertices
        d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)
        return float(d.max())

    @property
    def interior_angles(self) -> np.ndarray:
        """Interior angle at every vertex, in (0, 2*pi)."""
        v = self.vertices
        a = np.roll(v, 1, axis=0) - v
        b = np.roll(v, -1, axis=0) - v
        ang = np.arctan2(a[:, 1], a[:, 0]) - np.arctan2(b[:, 1], b[:, 0])
        return np.mod(ang, 2 * np.pi)

    def is_convex(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.interior_angles <= np.pi + tol))

    def contains(self, pts) -> np.ndarray:
        """Crossing-number point-in-polygon test (boundary points ambiguous)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        x, y = p[:, 0][:, None], p[:, 1][:, None]
        cond = (v[None, :, 1] > y) != (w[None, :, 1] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = v[None, :, 0] + (y - v[None, :, 1]) * (w[None, :, 0] - v[None, :, 0]) / (
                w[None, :, 1] - v[None, :, 1]
            )
        inside = np.sum(cond & (x < xc), axis=1) % 2 == 1
        return inside

    def to_json(self) -> dict:
        return {"type": "polygon", "vertices": self.vertices.tolist()}


@dataclass(frozen=True)
class SectorSpec:
    """Truncated sector {|arg z| < theta, |z| < r}."""

    theta: float
    r: float

    def __post_init__(self):
        if not (0.0 < self.theta < np.pi):
            raise InvalidArgument(f"sector half-aperture must lie in (0, pi), got {self.theta}")
        if not self.r > 0:
            raise InvalidArgument(f"sector radius must be positive, got {self.r}")


@dataclass(frozen=True)
class CuspProfile:
    """Width profile ``F`` of a cuspidal boundary point.

    Either a power law ``F(t) = t**p`` with ``p > 1`` or monotone samples
    ``(t, F)`` on ``[0, eta]``. The cusp is ``{|x'| < epsilon * F(x_n)}``.
    """

    epsilon: float
    eta: float
    p: Optional[float] = None
    samples: Optional[tuple] = None

    def __post_init__(self):
        if not (self.epsilon > 0 and self.eta > 0):
            raise InvalidArgument("epsilon and eta must be positive")
        if (self.p is None) == (self.samples is None):
            raise InvalidArgument("give exactly one of a power exponent or tabulated samples")
        if self.p is not None:
            if not self.p > 1:
                raise InvalidArgument(f"power cusp needs p > 1 so that F'(0) = 0, got p={self.p}")
            return
        t, f = (np.asarray(a, dtype=float) for a in self.samples)
        if t.ndim != 1 or t.shape != f.shape or len(t) < 3:
            raise InvalidArgument("tabulated profile needs matching 1-D arrays of length >= 3")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0) or t[-1] < self.eta:
            raise InvalidArgument("sample abscissae must start at 0, increase, and reach eta")
        if f[0] != 0.0:
            raise InvalidArgument(f"cusp profile must vanish at 0, got F(0)={f[0]}")
        if np.any(f[1:] <= 0):
            raise InvalidArgument("cusp profile must be positive on (0, eta]")
        if f[1] < f[0] or f[2] < f[1]:
            raise InvalidArgument("cusp profile must be non-decreasing near 0")
        object.__setattr__(self, "samples", (t, f))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.p is not None:
            return np.power(np.clip(t, 0.0, None), self.p)
        return self._interp()(np.clip(t, 0.0, self.samples[0][-1]))

    def _interp(self):
        # monotone cubic through the samples; built once per profile
        f = self.__dict__.get("_pchip")
        if f is None:
            from scipy.interpolate import PchipInterpolator

            f = PchipInterpolator(*self.samples)
            object.__setattr__(self, "_pchip", f)
        return f

    def second_derivative_of_square(self, t):
        """(F^2)'' = 2 (F'^2 + F F'') evaluated pointwise."""
        t = np.asarray(t, dtype=float)
        if self.p is not None:
            p = self.p
            return 2 * p * (2 * p - 1) * np.power(t, 2 * p - 2)
        f = self._interp()
        t = np.clip(t, 0.0, self.samples[0][-1])
        return 2 * (f(t, 1) ** 2 + f(t) * f(t, 2))


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangulation with boundary flags and corner bookkeeping.

    Attributes
    ----------
    nodes : (N, 2) float array
    triangles : (T, 3) int array, counter-clockwise
    boundary : (N,) bool array, nodes on the domain boundary
    corner_tag : (N,) int array, index of the nearest corner (-1 if none)
    corners : (K, 2) float array of corner coordinates
    grading_depth : (K,) int array of refinement rings applied per corner
    h : target interior element size
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    corner_tag: np.ndarray
    corners: np.ndarray
    grading_depth: np.ndarray
    h: float
    domain: Optional[Polygon] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("nodes", "triangles", "boundary", "corner_tag", "corners", "grading_depth"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            p = self.nodes[self.triangles]
            d1 = p[:, 1] - p[:, 0]
            d2 = p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        return self._cache["areas"]

    @property
    def diameters(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.linalg.norm(e, axis=2).max(axis=1)

    @property
    def min_angles(self) -> np.ndarray:
        """Smallest interior angle of every triangle, in degrees."""
        p = self.nodes[self.triangles]
        out = np.full(len(p), np.inf)
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            c = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            out = np.minimum(out, np.degrees(np.arccos(np.clip(c, -1, 1))))
        return out

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def neighbors(self) -> np.ndarray:
        """(T, 3) array; entry k is the triangle across the edge opposite vertex k."""
        if "neighbors" not in self._cache:
            t = self.triangles
            nt = len(t)
            nb = -np.ones((nt, 3), dtype=np.int64)
            lookup = {}
            for i in range(nt):
                for k in range(3):
                    a, b = t[i, (k + 1) % 3], t[i, (k + 2) % 3]
                    key = (a, b) if a < b else (b, a)
                    j = lookup.pop(key, None)
                    if j is None:
                        lookup[key] = (i, k)
                    else:
                        nb[i, k] = j[0]
                        nb[j[0], j[1]] = i
            self._cache["neighbors"] = nb
        return self._cache["neighbors"]

    def check(self, poly: Optional[Polygon] = None, rtol: float = 1e-10) -> None:
        """Raise :class:`MeshingFailure` when a structural invariant is broken."""
        if np.any(self.areas <= 0):
            raise MeshingFailure(f"{int(np.sum(self.areas <= 0))} triangles with non-positive area")
        poly = poly if poly is not None else self.domain
        if poly is not None:
            total = float(np.sum(self.areas))
            if abs(total - poly.area) > rtol * poly.area:
                raise MeshingFailure(f"mesh area {total!r} differs from polygon area {poly.area!r}")
        all_bnd = self.boundary[self.triangles].all(axis=1)
        if np.any(all_bnd):
            raise MeshingFailure(f"{int(all_bnd.sum())} triangles have only boundary nodes")

    def to_json(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": self.boundary.astype(int).tolist(),
            "corner_tag": self.corner_tag.tolist(),
            "corners": self.corners.tolist(),
            "grading_depth": self.grading_depth.tolist(),
            "h": self.h,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TriMesh":
        return cls(
            nodes=np.asarray(d["nodes"], dtype=float),
            triangles=np.asarray(d["triangles"], dtype=np.int64),
            boundary=np.asarray(d["boundary"], dtype=bool),
            corner_tag=np.asarray(d["corner_tag"], dtype=np.int64),
            corners=np.asarray(d["corners"], dtype=float).reshape(-1, 2),
            grading_depth=np.asarray(d["grading_depth"], dtype=np.int64),
            h=float(d["h"]),
        )


# ---------------------------------------------------------------------------
# Domain constructors


def make_regular_polygon(N: int, inradius: float = 1.0) -> Polygon:
    """Regular ``N``-gon centred at the origin with the given apothem.

    The midpoint of one edge sits on the positive x-axis, so vertices are at
    angles ``pi/N + 2*pi*k/N`` on the circle of radius ``inradius/cos(pi/N)``.
    """
    if int(N) != N or N < 3:
        raise InvalidArgument(f"regular polygon needs N >= 3, got {N}")
    if not inradius > 0:
        raise InvalidArgument("inradius must be positive")
    N = int(N)
    rc = inradius / np.cos(np.pi / N)
    ang = np.pi / N + 2 * np.pi * np.arange(N) / N
    return Polygon(np.column_stack([rc * np.cos(ang), rc * np.sin(ang)]))


def make_disk(radius: float = 1.0, m: int = 256) -> Polygon:
    """Inscribed ``m``-gon approximation of the disk (vertices on the circle)."""
    ang = 2 * np.pi * np.arange(m) / m
    return Polygon(radius * np.column_stack([np.cos(ang), np.sin(ang)]))


def make_rectangle(a: float, b: float, center=(0.0, 0.0)) -> Polygon:
    """Axis-aligned rectangle of width ``a`` and height ``b``."""
    cx, cy = center
    return Polygon(
        [[cx - a / 2, cy - b / 2], [cx + a / 2, cy - b / 2], [cx + a / 2, cy + b / 2], [cx - a / 2, cy + b / 2]]
    )


def make_sector(theta: float, r: float, closure: str = "arc", m: Optional[int] = None) -> Polygon:
    """Polygon for S_{theta,r} with apex at the origin and bisector on +x.

    ``closure="chord"`` closes with a single segment (only for theta < pi/2);
    ``closure="arc"`` samples the arc with ``m`` segments, all vertices on the
    circle, so the polygon is contained in the true sector.
    """
    SectorSpec(theta, r)
    if closure == "chord":
        if theta >= np.pi / 2:
            raise InvalidArgument("chord closure needs theta < pi/2")
        ang = np.array([-theta, theta])
    elif closure == "arc":
        if m is None:
            m = max(16, int(np.ceil(128 * theta / np.pi)))
        ang = np.linspace(-theta, theta, m + 1)
    else:
        raise InvalidArgument(f"unknown closure {closure!r}")
    pts = np.vstack([[0.0, 0.0], np.column_stack([r * np.cos(ang), r * np.sin(ang)])])
    return Polygon(pts)


def make_curvilinear_triangle(beta: float, epsilon: float, m: int = 64) -> Polygon:
    """Polygon approximating {0 < x < 1, 0 < y < epsilon * x**(1/(2*beta-1))}.

    The top curve is sampled at ``m`` abscissae ``x_k = (k/m)**2`` (clustered
    toward the tip) and closed by the segments y = 0 and x = 1.
    """
    if not (0.5 < beta < 1.0):
        raise InvalidArgument(f"beta must lie in (1/2, 1), got {beta}")
    if m < 16:
        raise InvalidArgument("curve resolution m must be at least 16")
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    k = 1.0 / (2 * beta - 1)
    xs = (np.arange(m, 0, -1) / m) ** 2
    top = np.column_stack([xs, epsilon * xs**k])
    return Polygon(np.vstack([[0.0, 0.0], [1.0, 0.0], top]))


def make_cusp_domain(profile: CuspProfile, body: Optional[Polygon] = None, m: int = 64) -> Polygon:
    """Planar domain with an exterior cusp at the origin pointing down the x_n axis.

    The walls are ``x' = +-epsilon*F(x_n)`` for ``0 < x_n <= eta``. Above
    ``x_n = eta`` the domain is closed by a semicircular cap of radius
    ``epsilon*F(eta)``, or by ``body`` (united with the cusp part) if given.
    """
    if not isinstance(profile, CuspProfile):
        raise InvalidArgument("profile must be a CuspProfile")
    eta, eps = profile.eta, profile.epsilon
    ts = eta * (np.arange(1, m + 1) / m) ** 2
    w = eps * profile(ts)
    if np.any(w <= 0):
        raise InvalidArgument("cusp profile must be positive on (0, eta]")
    right = np.column_stack([w, ts])
    left = np.column_stack([-w[::-1], ts[::-1]])
    if body is None:
        wt = w[-1]
        ang = np.linspace(0, np.pi, max(8, m // 2) + 1)[1:-1]
        cap = np.column_stack([wt * np.cos(ang), eta + wt * np.sin(ang)])
        return Polygon(np.vstack([[0.0, 0.0], right, cap, left]))
    from shapely.geometry import Polygon as _SPoly

    cusp = _SPoly(np.vstack([[0.0, 0.0], right, left]))
    merged = cusp.union(_SPoly(body.vertices))
    if merged.geom_type != "Polygon" or len(merged.interiors):
        raise InvalidArgument("body must overlap the cusp top and leave a simply connected union")
    return Polygon(np.asarray(merged.exterior.coords)[:-1])


def domain_from_json(data: dict, resolution: int = 256) -> Polygon:
    """Build a polygon from the JSON domain description used by the CLI."""
    kind = data.get("type")
    if kind == "polygon":
        return Polygon(data["vertices"])
    if kind == "regular":
        return make_regular_polygon(int(data["n"]), float(data.get("inradius", 1.0)))
    if kind == "disk":
        return make_disk(float(data.get("radius", 1.0)), int(data.get("m", resolution)))
    if kind == "sector":
        return make_sector(float(data["theta"]), float(data["r"]), data.get("closure", "arc"), data.get("m"))
    if kind == "cusp":
        prof = CuspProfile(epsilon=float(data["epsilon"]), eta=float(data["eta"]), p=float(data["p"]))
        return make_cusp_domain(prof, m=int(data.get("m", 64)))
    if kind == "curvilinear":
        return make_curvilinear_triangle(float(data["beta"]), float(data["epsilon"]), int(data.get("m", 64)))
    raise InvalidArgument(f"unknown domain type {kind!r}")


# ---------------------------------------------------------------------------
# Distance to the boundary


def _segment_distance(pts, a, b):
    """Distances from points (P, 2) to segments a->b (E, 2); returns (P, E)."""
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    rel = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pej,ej->pe", rel, d) / dd[None, :], 0.0, 1.0)
    diff = rel - t[..., None] * d[None, :, :]
    return np.sqrt(np.einsum("pej,pej->pe", diff, diff))


def polygon_distance(poly: Polygon, x, chunk: int = 20000):
    """Euclidean distance from ``x`` to the boundary polyline of ``poly``.

    ``x`` may be a single point or an (M, 2) array; the sign of the position
    (inside/outside) is ignored.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    a = poly.vertices
    b = np.roll(a, -1, axis=0)
    out = np.empty(len(pts))
    step = max(1, chunk // max(1, len(a)) * 8)
    for s in range(0, len(pts), step):
        out[s : s + step] = _segment_distance(pts[s : s + step], a, b).min(axis=1)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Meshing


def _grading_size(points, corners, h, q, depth):
    size = np.full(len(points), float(h))
    if depth <= 0 or len(corners) == 0:
        return size
    d = np.min(np.linalg.norm(points[:, None, :] - corners[None, :, :], axis=2), axis=1)
    k = np.zeros(len(points), dtype=int)
    for j in range(1, depth + 1):
        k += d < 3.0 * h * q ** (j - 1)
    return h * q**k


def _finish_mesh(nodes, tris, poly, h, corners, depth):
    p = nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    tris = np.where((cross < 0)[:, None], tris[:, [0, 2, 1]], tris)
    tol = 1e-12 * poly.diameter
    boundary = polygon_distance(poly, nodes) <= tol
    corners = np.asarray(corners, dtype=float).reshape(-1, 2)
    if len(corners):
        dc = np.linalg.norm(nodes[:, None, :] - corners[None, :, :], axis=2)
        tag = np.argmin(dc, axis=1)
    else:
        tag = -np.ones(len(nodes), dtype=np.int64)
    depth_arr = np.full(len(corners), int(depth), dtype=np.int64)
    return TriMesh(nodes, tris.astype(np.int64), boundary, tag, corners, depth_arr, float(h), domain=poly)


def triangulate(
    poly: Polygon,
    h: float,
    corner_grading: float = 0.5,
    depth: int = 0,
    min_angle: float = 20.0,
    max_retries: int = 4,
    corners=None,
) -> TriMesh:
    """Quality triangulation of ``poly`` with geometric grading at the corners.

    Interior elements have size about ``h``. Within ``depth`` rings around
    every vertex the size drops by ``corner_grading`` per ring; ring ``j``
    has outer radius ``3*h*q**(j-1)``. By default the graded corners are
    the vertices whose interior angle differs from pi by more than 15
    degrees, so sampled arcs are not graded; pass ``corners`` (an (K, 2)
    array) to override. Triangles whose three nodes all lie on
    the boundary are removed by inserting interior Steiner points, since the
    piecewise-linear solution would vanish identically on them.

    Raises
    ------
    InvalidArgument
        bad ``h``, ``corner_grading`` or a degenerate polygon
    MeshingFailure
        the quality or structural checks still fail after ``max_retries``
    """
    if not isinstance(poly, Polygon):
        poly = Polygon(poly)
    if not h > 0:
        raise InvalidArgument("h must be positive")
    if not (0.0 < corner_grading < 1.0):
        raise InvalidArgument("corner_grading must lie in (0, 1)")
    if depth < 0:
        raise InvalidArgument("depth must be non-negative")
    q = float(corner_grading)
    n = len(poly)
    if corners is None:
        corners = poly.vertices[np.abs(poly.interior_angles - np.pi) > np.radians(15.0)]
    corners = np.asarray(corners, dtype=float).reshape(-1, 2)
    segs = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])

    def target_area(pts):
        s = _grading_size(pts, corners, h, q, depth)
        return 0.5 * s**2

    angle = float(min_angle)
    last_err = "no attempt"
    for attempt in range(max_retries):
        try:
            mesh = tr.triangulate(
                {"vertices": np.array(poly.vertices), "segments": segs}, f"pq{angle:.6g}a{np.format_float_positional(0.5 * h * h, trim='-')}"
            )
            for _ in range(14):
                cen = mesh["vertices"][mesh["triangles"]].mean(axis=1)
                pts = mesh["vertices"][mesh["triangles"]]
                ar = 0.5 * np.abs(
                    (pts[:, 1, 0] - pts[:, 0, 0]) * (pts[:, 2, 1] - pts[:, 0, 1])
                    - (pts[:, 1, 1] - pts[:, 0, 1]) * (pts[:, 2, 0] - pts[:, 0, 0])
                )
                # size is evaluated at the vertex nearest a corner so rings are honoured
                tgt = np.minimum(target_area(cen), np.min([target_area(pts[:, k]) for k in range(3)], axis=0))
                if np.all(ar <= tgt * 1.0001):
                    break
                mesh["triangle_max_area"] = np.where(ar > tgt, tgt, -1.0)
                mesh = tr.triangulate(mesh, f"rpq{angle:.6g}a")
            for _ in range(6):
                verts, tris = mesh["vertices"], mesh["triangles"]
                on_bnd = polygon_distance(poly, verts) <= 1e-12 * poly.diameter
                bad = on_bnd[tris].all(axis=1)
                if not bad.any():
                    break
                extra = verts[tris[bad]].mean(axis=1)
                mesh = tr.triangulate(
                    {"vertices": np.vstack([verts, extra]), "segments": mesh["segments"]},
                    f"pq{angle:.6g}",
                )
            out = _finish_mesh(mesh["vertices"], mesh["triangles"], poly, h, corners, depth)
            out.check(poly, rtol=1e-10)
            worst = float(out.min_angles.min())
            smallest_input = float(np.degrees(poly.interior_angles.min()))
            if worst < min(min_angle, smallest_input) - 1e-6:
                raise MeshingFailure(f"minimum angle {worst:.3f} deg below target {min_angle}")
            return out
        except (MeshingFailure, RuntimeError) as exc:  # triangle raises RuntimeError on failure
            last_err = str(exc)
            angle = max(angle - 2.0, 10.0)
    raise MeshingFailure(f"triangulation failed after {max_retries} attempts: {last_err}")


def triangulate_graph(
    lower: Callable,
    upper: Callable,
    a_nodes: Sequence[float],
    ny: int,
    transpose: bool = False,
    corners=None,
    h: Optional[float] = None,
    poly: Optional[Polygon] = None,
) -> TriMesh:
    """Mapped mesh of the graph domain {lower(a) < b < upper(a), a0 < a < a1}.

    Each column ``a = a_nodes[k]`` carries ``ny + 1`` equispaced nodes between
    the two walls; a column where the walls meet collapses to a single node
    and is joined to its neighbour by a fan. Cells are split along one
    diagonal, which keeps every angle at most about 90 degrees when columns
    are close relative to the local width. This mesher is meant for thin
    channels and cusps, where an isotropic mesher would need a prohibitive
    number of elements. ``transpose=True`` swaps the roles of the axes
    (the physical point is ``(b, a)``).
    """
    a_nodes = np.asarray(a_nodes, dtype=float)
    if a_nodes.ndim != 1 or len(a_nodes) < 2 or np.any(np.diff(a_nodes) <= 0):
        raise InvalidArgument("a_nodes must be a strictly increasing 1-D sequence")
    if ny < 2:
        raise InvalidArgument("ny must be at least 2")
    lo = np.asarray(lower(a_nodes), dtype=float) * np.ones_like(a_nodes)
    hi = np.asarray(upper(a_nodes), dtype=float) * np.ones_like(a_nodes)
    width = hi - lo
    if np.any(width < 0):
        raise InvalidArgument("upper wall below lower wall")
    scale = float(np.max(width)) + float(a_nodes[-1] - a_nodes[0])
    collapsed = width <= 1e-15 * scale
    nodes = []
    bnd = []
    cols = []
    for k, a in enumerate(a_nodes):
        end = k == 0 or k == len(a_nodes) - 1
        if collapsed[k]:
            cols.append([len(nodes)])
            nodes.append((a, lo[k]))
            bnd.append(True)
            continue
        ids = []
        for j in range(ny + 1):
            ids.append(len(nodes))
            nodes.append((a, lo[k] + width[k] * j / ny))
            bnd.append(end or j == 0 or j == ny)
        cols.append(ids)
    tris = []
    for k in range(len(a_nodes) - 1):
        c0, c1 = cols[k], cols[k + 1]
        if len(c0) == 1 and len(c1) == 1:
            raise InvalidArgument("two consecutive collapsed columns")
        if len(c0) == 1:
            tris += [(c0[0], c1[j], c1[j + 1]) for j in range(ny)]
        elif len(c1) == 1:
            tris += [(c0[j], c1[0], c0[j + 1]) for j in range(ny)]
        else:
            for j in range(ny):
                a, b, c, d = c0[j], c1[j], c1[j + 1], c0[j + 1]
                first = [(a, b, c), (a, c, d)]
                if any(all(bnd[i] for i in t) for t in first):
                    first = [(a, b, d), (d, b, c)]
                tris += first
    nodes = np.asarray(nodes, dtype=float)
    if transpose:
        nodes = nodes[:, ::-1].copy()
    tris = np.asarray(tris, dtype=np.int64)
    p = nodes[tris]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    tris = np.where((cross < 0)[:, None], tris[:, [0, 2, 1]], tris)
    corners = np.zeros((0, 2)) if corners is None else np.asarray(corners, dtype=float).reshape(-1, 2)
    if len(corners):
        tag = np.argmin(np.linalg.norm(nodes[:, None, :] - corners[None, :, :], axis=2), axis=1)
    else:
        tag = -np.ones(len(nodes), dtype=np.int64)
    if h is None:
        h = float(np.max(np.diff(a_nodes)))
    mesh = TriMesh(
        nodes, tris, np.asarray(bnd), tag, corners, np.zeros(len(corners), dtype=np.int64), float(h), domain=poly
    )
    if np.any(mesh.areas <= 0):
        raise MeshingFailure("graph mesh produced degenerate triangles")
    return mesh


# ---------------------------------------------------------------------------
# Convex descriptors


def _require_convex(poly: Polygon):
    if not poly.is_convex():
        raise NotConvex("operation requires a convex polygon")


def _halfplanes(poly: Polygon):
    """Outward unit normals n_i and offsets b_i with Omega = {n_i . x < b_i}."""
    v = poly.vertices
    d = np.roll(v, -1, axis=0) - v
    nrm = np.column_stack([d[:, 1], -d[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    b = np.einsum("ij,ij->i", nrm, v)
    return nrm, b


def chebyshev_center(poly: Polygon):
    """Centre and radius of the largest inscribed disk (convex polygons)."""
    _require_convex(poly)
    nrm, b = _halfplanes(poly)
    A = np.column_stack([nrm, np.ones(len(nrm))])
    res = linprog(c=[0, 0, -1], A_ub=A, b_ub=b, bounds=[(None, None), (None, None), (0, None)], method="highs")
    if not res.success:
        raise MeshingFailure(f"Chebyshev centre LP failed: {res.message}")
    return res.x[:2], float(res.x[2])


def min_enclosing_ball(points):
    """Smallest enclosing circle (centre, radius) by incremental Welzl search."""
    pts = np.asarray(points, dtype=float)
    order = np.random.default_rng(12345).permutation(len(pts))
    pts = pts[order]
    scale = float(np.ptp(pts, axis=0).max()) or 1.0
    eps = 1e-12 * scale

    def circ2(a, b):
        c = 0.5 * (a + b)
        return c, float(np.linalg.norm(a - c))

    def circ3(a, b, c):
        ax, ay = a
        bx, by = b
        cx, cy = c
        d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        if abs(d) < 1e-300:
            cands = [circ2(a, b), circ2(a, c), circ2(b, c)]
            return max(cands, key=lambda t: t[1])
        ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
        uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
        o = np.array([ux, uy])
        return o, float(np.linalg.norm(a - o))

    def outside(p, c, r):
        return np.linalg.norm(p - c) > r + eps

    c, r = pts[0].copy(), 0.0
    for i in range(1, len(pts)):
        if outside(pts[i], c, r):
            c, r = pts[i].copy(), 0.0
            for j in range(i):
                if outside(pts[j], c, r):
                    c, r = circ2(pts[i], pts[j])
                    for k in range(j):
                        if outside(pts[k], c, r):
                            c, r = circ3(pts[i], pts[j], pts[k])
    return c, r


def convex_descriptors(poly: Polygon):
    """Return ``(inradius, circumradius, eccentricity)`` of a convex polygon."""
    _require_convex(poly)
    _, rin = chebyshev_center(poly)
    _, rout = min_enclosing_ball(poly.vertices)
    return rin, rout, rout / rin


def _side_admits(nrm, b, i, R):
    """Is there a disk of radius R inside the polygon tangent to side i?"""
    ni = nrm[i]
    t = np.array([-ni[1], ni[0]])
    c0 = ni * (b[i] - R)
    lo, hi = -np.inf, np.inf
    for j in range(len(b)):
        if j == i:
            continue
        a = float(nrm[j] @ t)
        rhs = float(b[j] - R - nrm[j] @ c0)
        if abs(a) < 1e-15:
            if rhs < 0:
                return False
        elif a > 0:
            hi = min(hi, rhs / a)
        else:
            lo = max(lo, rhs / a)
    return lo <= hi


def max_admissible_radius(poly: Polygon, max_iter: int = 200) -> float:
    """Largest R such that every side is touched by some inscribed disk of radius R.

    Bisection on R in ``[0, inradius]``; for each side the admissible centres
    form an interval on the line parallel to the side at distance R, so the
    test is exact.
    """
    _require_convex(poly)
    nrm, b = _halfplanes(poly)
    _, rin = chebyshev_center(poly)
    tol = 1e-9 * poly.diameter
    lo, hi = 0.0, rin * (1 + 1e-12)

    def ok(R):
        return all(_side_admits(nrm, b, i, R) for i in range(len(b)))

    if ok(hi):
        return min(hi, rin)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
