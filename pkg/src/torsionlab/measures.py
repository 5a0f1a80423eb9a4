"""Functionals of the discrete torsion function and of the boundary distance.

Singular quadrature of u^{-beta}, torsional rigidity, exact sublevel
areas of piecewise-linear fields, the layer-cake (Mellin) representation,
weak-type exponents, collar profiles omega_alpha and coarea checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, FitFailure, InvalidArgument, NotConvex
from .geometry import Polygon, chebyshev_center, polygon_distance
from .solver import CLAMP_FLOOR, ScalarField, assemble

__all__ = [
    "BetaIntegralResult",
    "DistanceProfile",
    "beta_integral",
    "triangle_beta_integrals",
    "torsional_rigidity",
    "sublevel_measure",
    "mellin_beta_integral",
    "weak_type_exponent",
    "inner_offset",
    "collar_area",
    "omega_profile",
    "distance_integral",
    "coarea_check",
    "ahlfors_bound_check",
]

# 7-point degree-5 rule (barycentric points, weights sum to 1)
_A1, _B1 = 0.059715871789769820, 0.470142064105115090
_A2, _B2 = 0.797426985353087322, 0.101286507323456339
_W0, _W1, _W2 = 0.225, 0.132394152788506181, 0.125939180544827153
_RULE7 = (
    np.array(
        [
            [1 / 3, 1 / 3, 1 / 3],
            [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
            [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
        ]
    ),
    np.array([_W0, _W1, _W1, _W1, _W2, _W2, _W2]),
)
_RULE3 = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.full(3, 1 / 3),
)


@dataclass
class BetaIntegralResult:
    """Value of int u^{-beta} with error estimate and per-corner partial sums."""

    beta: float
    value: float
    error_estimate: float
    corner_contributions: Dict[int, float] = field(default_factory=dict)
    refinement_history: List[tuple] = field(default_factory=list)
    tainted: bool = False

    def to_json(self) -> dict:
        return {
            "beta": self.beta,
            "value": self.value,
            "error_estimate": self.error_estimate,
            "corner_contributions": {str(k): v for k, v in self.corner_contributions.items()},
            "refinement_history": [list(p) for p in self.refinement_history],
            "tainted": self.tainted,
        }


def _check_beta(beta):
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")


# near-constant triangles (spread below this fraction of the max) use the
# 7-point rule; elsewhere the divided-difference formula is exact
_SPREAD_EXACT = 1e-3


def _first_difference(x, y, p):
    """(y^p - x^p) / (y - x) for 0 <= x <= y without cancellation."""
    d = y - x
    with np.errstate(divide="ignore", invalid="ignore"):
        r = d / x
        stable = x**p * np.expm1(p * np.log1p(r)) / d
        conf = p * x ** (p - 1)
        from_zero = y ** (p - 1)
    return np.where(x <= 0, from_zero, np.where(d == 0, conf, stable))


def _affine_exact(a, b, c, beta):
    """int over the reference triangle of L^{-beta}/(2|T|) for sorted vertex values a <= b <= c.

    Second divided difference of G(s) = s^{2-beta}/((1-beta)(2-beta)) at
    (a, b, c); zero values are allowed as long as c > 0.
    """
    p = 2.0 - beta
    k = (1 - beta) * (2 - beta)
    g_ab = _first_difference(a, b, p)
    g_bc = _first_difference(b, c, p)
    g_ac = _first_difference(a, c, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = (g_bc - g_ab) / (c - a)
        # b at an endpoint: the confluent second difference
        dd = np.where(b == c, (p * np.maximum(c, 0) ** (p - 1) - g_ac) / (c - a), dd)
    return dd / k


def triangle_beta_integrals(field: ScalarField, beta: float, embedded: bool = False):
    """Per-triangle integrals of u_h^{-beta}.

    u_h is affine on each triangle, so the integral equals 2|T| times the
    second divided difference of s^{2-beta}/((1-beta)(2-beta)) at the three
    vertex values; vanishing vertices are allowed. Triangles whose values
    vary by less than a relative 1e-3 use the 7-point rule instead, which is
    accurate to rounding there and avoids cancellation.

    With ``embedded=True`` a cheaper estimate is returned as well: the
    3-point rule on triangles without zeros, and an 8-point Gauss-Legendre
    rule along the Duffy-collapsed direction for triangles with one zero.
    """
    _check_beta(beta)
    mesh = field.mesh
    u = np.sort(field.values[mesh.triangles], axis=1)
    # exact zeros: boundary nodes and clamped nodes; tiny positive values stay
    u = np.where(u <= CLAMP_FLOOR, 0.0, u)
    a, b, c = u[:, 0], u[:, 1], u[:, 2]
    area = mesh.areas
    out = np.full(len(u), np.inf)
    pos = c > 0
    flat = pos & (a > 0) & (c - a <= _SPREAD_EXACT * c)
    ex = pos & ~flat
    out[ex] = 2 * area[ex] * _affine_exact(a[ex], b[ex], c[ex], beta)
    pts, w = _RULE7
    out[flat] = area[flat] * ((u[flat] @ pts.T) ** (-beta) @ w)
    if not embedded:
        return out

    low = np.full(len(u), np.inf)
    nz = (u == 0).sum(axis=1)
    m0 = nz == 0
    pts3, w3 = _RULE3
    low[m0] = area[m0] * ((u[m0] @ pts3.T) ** (-beta) @ w3)
    m1 = nz == 1
    if np.any(m1):
        x, wg = np.polynomial.legendre.leggauss(8)
        t = 0.5 * (x + 1)
        g = b[m1, None] + t[None, :] * (c[m1] - b[m1])[:, None]
        low[m1] = 2 * area[m1] / (2 - beta) * 0.5 * (g ** (-beta) @ wg)
    m2 = (nz == 2) & pos
    low[m2] = out[m2]
    return out, low


def _corner_masks(mesh, radius):
    corners = mesh.corners
    cen = mesh.centroids
    masks = {}
    for i, c in enumerate(corners):
        masks[i] = np.linalg.norm(cen - c, axis=1) < radius
    return masks


def _default_corner_radius(mesh):
    c = mesh.corners
    if len(c) < 2:
        return 0.25 * float(np.ptp(mesh.nodes, axis=0).max())
    d = np.linalg.norm(c[:, None] - c[None], axis=2)
    d[d == 0] = np.inf
    return 0.5 * float(d.min())


def beta_integral(
    field: Union[ScalarField, Sequence[ScalarField]],
    beta: float,
    corner_radius: Optional[float] = None,
) -> BetaIntegralResult:
    """Corner-aware quadrature of int_Omega u_h^{-beta}.

    ``field`` may be a single field or a refinement sequence (coarse to
    fine); the value is taken from the finest field. With a sequence the
    error estimate is the last increment of the history; for a single field
    it is the gap between the main and the embedded lower-order rules.
    ``corner_contributions`` sums triangles with centroid within
    ``corner_radius`` of each mesh corner.
    """
    _check_beta(beta)
    fields = [field] if isinstance(field, ScalarField) else list(field)
    if not fields:
        raise InvalidArgument("no field given")
    history = []
    for f in fields[:-1]:
        history.append((f.h, float(np.sum(triangle_beta_integrals(f, beta)))))
    last = fields[-1]
    per, low = triangle_beta_integrals(last, beta, embedded=True)
    value = float(np.sum(per))
    history.append((last.h, value))
    if len(history) >= 2:
        err = abs(history[-1][1] - history[-2][1])
    else:
        err = float(np.sum(np.abs(per - low)))
    rad = _default_corner_radius(last.mesh) if corner_radius is None else corner_radius
    contrib = {i: float(np.sum(per[m])) for i, m in _corner_masks(last.mesh, rad).items()}
    tainted = any(f.n_clamped > 0 for f in fields)
    return BetaIntegralResult(beta, value, float(err), contrib, history, tainted)


def torsional_rigidity(field: ScalarField):
    """``(int u_h, int |grad u_h|^2, mismatch)``; both integrals are exact for P1."""
    mesh = field.mesh
    iu = float(np.sum(mesh.areas * field.values[mesh.triangles].mean(axis=1)))
    K, _ = assemble(mesh)
    u = field.values
    energy = float(np.sum(u * (K @ u)))
    return iu, energy, abs(iu - energy)


def _sublevel_fraction(a, b, c, lam):
    """Fraction of a triangle where a linear function with sorted vertex values a<=b<=c is below lam."""
    lam = np.asarray(lam, dtype=float)
    a, b, c = (np.asarray(v, dtype=float)[..., None] for v in (a, b, c))
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = (lam - a) ** 2 / ((b - a) * (c - a))
        f2 = 1 - (c - lam) ** 2 / ((c - a) * (c - b))
    out = np.where(lam <= a, 0.0, np.where(lam >= c, 1.0, np.where(lam <= b, f1, f2)))
    return np.nan_to_num(out, nan=1.0)


def sublevel_measure(field: ScalarField, lam, per_triangle: bool = False):
    """Exact area of {u_h < lam} for scalar or array ``lam``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr <= 0):
        raise InvalidArgument("lambda must be positive")
    mesh = field.mesh
    v = np.sort(field.values[mesh.triangles], axis=1)
    frac = _sublevel_fraction(v[:, 0], v[:, 1], v[:, 2], lam_arr[None, :])
    parts = frac * mesh.areas[:, None]
    if per_triangle:
        return parts[:, 0] if np.ndim(lam) == 0 else parts
    tot = parts.sum(axis=0)
    return float(tot[0]) if np.ndim(lam) == 0 else tot


def mellin_beta_integral(field: ScalarField, beta: float, n: int = 400, lo_rel: float = 1e-6) -> float:
    """beta * int_0^inf lam^{-beta-1} |{u_h < lam}| d lam by a log-grid trapezoid.

    The grid spans [lo_rel*max u, max u]. Above max u the measure equals
    |Omega| exactly; below the grid the measure is taken linear in lam,
    fitted at the first grid point.
    """
    _check_beta(beta)
    umax = field.max
    lam = np.geomspace(lo_rel * umax, umax, n)
    m = sublevel_measure(field, lam)
    x = np.log(lam)
    body = beta * integrate.trapezoid(lam ** (-beta) * m, x)
    area = float(np.sum(field.mesh.areas))
    top = area * umax ** (-beta)
    c = m[0] / lam[0]
    bottom = beta * c * lam[0] ** (1 - beta) / (1 - beta)
    return float(body + top + bottom)


def weak_type_exponent(field: ScalarField, lambda_grid) -> float:
    """Least-squares slope of log|{u_h < lam}| against log lam."""
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.ndim != 1 or len(lam) < 3:
        raise FitFailure("need at least three lambda values")
    if np.log10(lam.max() / lam.min()) < 2 - 1e-12:
        raise FitFailure("lambda grid must span at least two decades")
    m = sublevel_measure(field, lam)
    if np.any(m <= 0):
        raise FitFailure("empty sublevel set on the grid")
    slope, _ = np.polyfit(np.log(lam), np.log(m), 1)
    if not np.isfinite(slope):
        raise FitFailure("non-finite slope")
    return float(slope)


# ---------------------------------------------------------------------------
# boundary distance


@dataclass
class DistanceProfile:
    """Collar profile omega_alpha(r) = |{delta < r}| / r^alpha on a radius grid."""

    alpha: float
    radii: np.ndarray
    omega_values: np.ndarray
    collar_areas: np.ndarray
    exact: bool


def _clip(pts, n, c):
    """Clip a convex polygon (vertex array) to the half-plane n.x <= c."""
    if len(pts) == 0:
        return pts
    out = []
    d = pts @ n - c
    m = len(pts)
    for i in range(m):
        p, q = pts[i], pts[(i + 1) % m]
        dp, dq = d[i], d[(i + 1) % m]
        if dp <= 0:
            out.append(p)
        if (dp < 0 < dq) or (dq < 0 < dp):
            out.append(p + (q - p) * (dp / (dp - dq)))
    return np.asarray(out).reshape(-1, 2)


def _area(pts):
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def _perimeter(pts):
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))


def inner_offset(poly: Polygon, r: float) -> np.ndarray:
    """Vertices of {x in Omega : delta(x) >= r} for a convex polygon."""
    if not poly.is_convex():
        raise NotConvex("exact inner offsets need a convex polygon")
    v = poly.vertices
    d = np.roll(v, -1, axis=0) - v
    nrm = np.column_stack([d[:, 1], -d[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    b = np.einsum("ij,ij->i", nrm, v)
    pts = v.copy()
    for i in range(len(v)):
        pts = _clip(pts, nrm[i], b[i] - r)
    return pts


def _grid_collar(poly: Polygon, radii, resolution: int = 2048, chunk: int = 1 << 16):
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    span = float((hi - lo).max())
    step = span / resolution
    sub = (np.array([0.25, 0.75]) * step)
    xs = lo[0] + np.arange(int(np.ceil((hi[0] - lo[0]) / step))) * step
    ys = lo[1] + np.arange(int(np.ceil((hi[1] - lo[1]) / step))) * step
    cell = step * step / 4
    counts = np.zeros(len(radii))
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    base = np.column_stack([X.ravel(), Y.ravel()])
    for dx in sub:
        for dy in sub:
            pts_all = base + [dx, dy]
            for s in range(0, len(pts_all), chunk):
                pts = pts_all[s : s + chunk]
                ins = poly.contains(pts)
                if not ins.any():
                    continue
                dist = polygon_distance(poly, pts[ins])
                counts += np.sum(dist[:, None] < np.asarray(radii)[None, :], axis=0)
    return counts * cell


def collar_area(poly: Polygon, r, resolution: int = 2048):
    """|{x in Omega : delta(x) < r}|; exact for convex polygons, grid count otherwise."""
    radii = np.atleast_1d(np.asarray(r, dtype=float))
    if poly.is_convex():
        vals = np.array([poly.area - _area(inner_offset(poly, t)) for t in radii])
    else:
        vals = _grid_collar(poly, radii, resolution)
    return float(vals[0]) if np.ndim(r) == 0 else vals


def omega_profile(poly: Polygon, alpha: float, radii, resolution: int = 2048) -> DistanceProfile:
    """omega_alpha(r) = |{delta < r}| / r^alpha on the given radii."""
    if not (0 <= alpha < 1):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise InvalidArgument("radii must be positive and increasing")
    areas = collar_area(poly, radii, resolution)
    return DistanceProfile(alpha, radii, areas / radii**alpha, areas, poly.is_convex())


def _layer_integral(poly: Polygon, alpha: float, t: float) -> float:
    """int_{delta < t} delta^{-alpha} via level-set perimeters (convex polygons)."""
    per = lambda s: _perimeter(inner_offset(poly, s))
    # perimeter is piecewise linear in s; split at the offsets where an edge vanishes
    val, _ = integrate.quad(per, 0.0, t, weight="alg", wvar=(-alpha, 0.0), epsabs=0, epsrel=1e-12, limit=400)
    return float(val)


def _coarea_rhs(poly: Polygon, alpha: float, t: float, n: int = 512, lo_rel: float = 1e-6) -> float:
    """omega_alpha(t) + alpha int_0^t omega_alpha(r)/r dr with a log-spaced trapezoid."""
    r = np.geomspace(lo_rel * t, t, n)
    A = collar_area(poly, r)
    om = A / r**alpha
    body = alpha * integrate.trapezoid(om, np.log(r))
    # below the grid the collar is perimeter * r to first order
    lead = A[0] / r[0]
    tail = alpha * lead * r[0] ** (1 - alpha) / (1 - alpha)
    return float(om[-1] + body + tail)


def distance_integral(poly: Polygon, alpha: float, check: bool = False):
    """int_Omega delta^{-alpha}.

    Uses the collar identity with t equal to the inradius, where the whole
    domain is the collar. For convex polygons ``check=True`` also returns
    the direct level-set quadrature. ``alpha >= 1`` returns ``inf``
    (divergence expected for polygons).
    """
    if alpha < 0:
        raise DomainError("alpha must be non-negative")
    if alpha >= 1:
        return (math.inf, math.inf) if check else math.inf
    if alpha == 0:
        return (poly.area, poly.area) if check else poly.area
    if not poly.is_convex():
        raise NotConvex("distance_integral is implemented for convex polygons")
    _, rin = chebyshev_center(poly)
    t = rin * (1 + 1e-12)
    val = _coarea_rhs(poly, alpha, t)
    if check:
        return val, _layer_integral(poly, alpha, rin)
    return val


def coarea_check(poly: Polygon, alpha: float, t: float):
    """Compare int_{delta<t} delta^{-alpha} with its collar-profile expression.

    Returns ``(lhs, rhs, relative_gap)``.
    """
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0, 1)")
    _, rin = chebyshev_center(poly)
    if not (0 < t < rin):
        raise InvalidArgument("t must lie in (0, inradius)")
    lhs = _layer_integral(poly, alpha, t)
    rhs = _coarea_rhs(poly, alpha, t)
    return lhs, rhs, abs(lhs - rhs) / abs(lhs)


def ahlfors_bound_check(polys, alpha: float) -> dict:
    """Ratios int delta^{-alpha} / (|Omega|^{1-alpha} H^1(dOmega)^alpha) over a family.

    Reports the fitted constant (the family maximum) and, at alpha = 0, the
    isoperimetric inequality |Omega| <= H^1(dOmega)^2 / (4 pi).
    """
    if isinstance(polys, Polygon):
        polys = [polys]
    if not (0 <= alpha < 1):
        raise DomainError("alpha must lie in [0, 1)")
    ratios = []
    for p in polys:
        I = distance_integral(p, alpha)
        ratios.append(I / (p.area ** (1 - alpha) * p.perimeter**alpha))
    C = max(ratios)
    rep = {
        "alpha": alpha,
        "ratios": ratios,
        "C_fit": C,
        "holds": bool(all(r <= C * (1 + 1e-12) for r in ratios)),
    }
    if alpha == 0:
        rep["isoperimetric"] = [bool(p.area <= p.perimeter**2 / (4 * np.pi)) for p in polys]
    return rep
