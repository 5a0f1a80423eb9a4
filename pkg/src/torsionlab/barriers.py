"""Explicit sub- and supersolutions of -Laplace(u) = 1 and their beta-integrals.

Each barrier is a closed-form function on a model region (sector, cone,
disk, wedge, slab, curvilinear channel, cusp). Comparing it with the torsion
function through the maximum principle gives two-sided pointwise bounds;
their exact beta-integrals are provided alongside.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar

from .errors import DomainError, InvalidArgument, OutOfDomain
from .geometry import CuspProfile
from .specfun import beta_fn, cap_eigen, corner_exponent, gamma_fn

__all__ = [
    "sector_barrier",
    "sector_constant",
    "SlitSectorWarning",
    "sector_beta_integral_exact",
    "cone_barrier",
    "cone_constant",
    "cone_beta_integral_exact",
    "cap_phi_integral",
    "disk_solution",
    "triangle_barrier",
    "slab_barrier",
    "slab_beta_integral",
    "curvilinear_barrier",
    "curvilinear_eps_bound",
    "curvilinear_truncated_integral",
    "cusp_barrier",
    "cusp_barrier_laplacian",
    "convex_corner_pair",
    "convex_corner_ratio_sup",
    "calibrate_convex_corner_constant",
    "CONVEX_CORNER_C",
    "regular_polygon_bounds",
    "LOG_BRANCH_TOL",
]

LOG_BRANCH_TOL = 1e-8


def _check_beta(beta):
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")


def _check_sector(theta, r):
    if not (0.0 < theta <= np.pi):
        raise DomainError(f"theta must lie in (0, pi], got {theta}")
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")


# ---------------------------------------------------------------------------
# planar sector


def sector_barrier(theta, r, rho, omega):
    """Subsolution on S_{theta,r} with -Laplace(v) = cos(pi*omega/(2*theta)).

    With ``a = pi/(2 theta)``::

        v = r^2/(a^2 - 4) * ((rho/r)^2 - (rho/r)^a) * cos(a omega)    (a != 2)
        v = rho^2/4 * log(r/rho) * cos(2 omega)                       (a == 2)

    ``v`` vanishes on the two rays and on the arc, and is positive inside.
    Accepts arrays for ``rho`` and ``omega``.
    """
    _check_sector(theta, r)
    rho = np.asarray(rho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    tol = 1e-12
    if np.any(rho < 0) or np.any(rho > r * (1 + tol)) or np.any(np.abs(omega) > theta * (1 + tol)):
        raise OutOfDomain("point outside the closed sector")
    a = np.pi / (2 * theta)
    s = np.clip(rho / r, 0.0, 1.0)
    ang = np.clip(np.cos(a * omega), 0.0, None)
    if abs(theta - np.pi / 4) < LOG_BRANCH_TOL:
        with np.errstate(divide="ignore", invalid="ignore"):
            rad = np.where(s > 0, 0.25 * rho**2 * -np.log(s), 0.0)
    else:
        rad = r * r * (s**2 - s**a) / (a * a - 4)
    out = rad * ang
    return float(out) if out.ndim == 0 else out


class SlitSectorWarning(UserWarning):
    """Issued for the slit-plane sector theta = pi."""


def sector_constant(theta: float, beta: float) -> float:
    """C(theta, beta) with  int_{S_{theta,r}} v^{-beta} = C * r^{2(1-beta)}.

    The angular factor is (2 theta/pi) B(1/2, (1-beta)/2); the radial factor
    has three branches according to the sign of a - 2, a = pi/(2 theta).
    For theta > pi/4 the Beta argument is (theta - beta*pi/4)/(theta - pi/4).
    """
    _check_sector(theta, 1.0)
    _check_beta(beta)
    if theta == np.pi:
        # slit plane: the formula extends, but no polygon corner produces it
        warnings.warn("sector_constant at theta = pi (slit plane) is outside the polygon-corner range",
                      SlitSectorWarning, stacklevel=2)
    a = np.pi / (2 * theta)
    ang = (2 * theta / np.pi) * beta_fn(0.5, (1 - beta) / 2)
    if abs(theta - np.pi / 4) <= LOG_BRANCH_TOL:
        rad = 4.0**beta * gamma_fn(1 - beta) / (2 - 2 * beta) ** (1 - beta)
    elif a > 2:
        rad = abs(a * a - 4) ** beta / (a - 2) * beta_fn((2 - 2 * beta) / (a - 2), 1 - beta)
    else:
        rad = abs(a * a - 4) ** beta / (2 - a) * beta_fn((theta - beta * np.pi / 4) / (theta - np.pi / 4), 1 - beta)
    return ang * rad


def sector_beta_integral_exact(theta: float, r: float, beta: float) -> float:
    """Exact value of int_{S_{theta,r}} v_{theta,r}^{-beta}."""
    _check_sector(theta, r)
    return sector_constant(theta, beta) * r ** (2 * (1 - beta))


# ---------------------------------------------------------------------------
# n-dimensional cone


@lru_cache(maxsize=64)
def _cap(n, theta):
    return cap_eigen(n, theta, grid=256)


def cone_barrier(n: int, theta: float, r: float, rho, omega):
    """Subsolution on the cone {colatitude < theta, |x| < r} in R^n.

    ``v = r^2/(Lambda - 2n) ((rho/r)^2 - (rho/r)^alpha) phi(omega)`` with
    the cap eigenpair (Lambda, phi); when alpha = 2 the limit
    ``rho^2/(n+2) log(r/rho) phi(omega)`` is used.
    """
    _check_sector(theta, r)
    ce = corner_exponent(n, theta)
    cap = _cap(int(n), float(theta))
    rho = np.asarray(rho, dtype=float)
    omega = np.abs(np.asarray(omega, dtype=float))
    if np.any(rho < 0) or np.any(rho > r * (1 + 1e-12)) or np.any(omega > theta * (1 + 1e-12)):
        raise OutOfDomain("point outside the closed cone")
    s = np.clip(rho / r, 0.0, 1.0)
    phi = np.clip(cap(np.minimum(omega, theta)), 0.0, None)
    if abs(ce.alpha - 2) <= LOG_BRANCH_TOL:
        with np.errstate(divide="ignore", invalid="ignore"):
            rad = np.where(s > 0, rho**2 / (n + 2) * -np.log(s), 0.0)
    else:
        rad = r * r * (s**2 - s**ce.alpha) / (ce.lam - 2 * n)
    out = rad * phi
    return float(out) if out.ndim == 0 else out


def cone_constant(n: int, theta: float, beta: float) -> float:
    """Radial factor c_n with int v^{-beta} = c_n r^{n-2 beta} int_G phi^{-beta}."""
    _check_beta(beta)
    ce = corner_exponent(n, theta)
    al, lam = ce.alpha, ce.lam
    if abs(al - 2) <= LOG_BRANCH_TOL:
        return (n - 2 * beta) ** (beta - 1) * (n + 2) ** beta * gamma_fn(1 - beta)
    pref = abs(lam - 2 * n) ** beta
    if al > 2:
        return pref / (al - 2) * beta_fn((n - 2 * beta) / (al - 2), 1 - beta)
    return pref / (2 - al) * beta_fn((n - al * beta) / (2 - al), 1 - beta)


def _sphere_measure(k: int) -> float:
    """Surface measure of the unit sphere S^k in R^{k+1}."""
    return 2 * np.pi ** ((k + 1) / 2) / gamma_fn((k + 1) / 2)


def cap_phi_integral(n: int, theta: float, beta: float) -> float:
    """int over the cap of phi^{-beta} d sigma (quadrature with algebraic end weight)."""
    _check_beta(beta)
    if n == 2:
        return (2 * theta / np.pi) * beta_fn(0.5, (1 - beta) / 2)
    cap = _cap(int(n), float(theta))
    h = 1e-6 * theta
    edge_slope = cap(theta - h) / h

    def g(t):
        # phi(t)/(theta - t) is smooth up to t = theta
        d = theta - t
        ratio = edge_slope if d < h else cap(t) / d
        return ratio ** (-beta) * np.sin(t) ** (n - 2)

    val, _ = integrate.quad(g, 0.0, theta, weight="alg", wvar=(0.0, -beta), epsabs=0, epsrel=1e-12, limit=200)
    return _sphere_measure(n - 2) * val


def cone_beta_integral_exact(n: int, theta: float, r: float, beta: float) -> float:
    """Exact beta-integral of the cone barrier (cap factor by quadrature)."""
    return cone_constant(n, theta, beta) * r ** (n - 2 * beta) * cap_phi_integral(n, theta, beta)


# ---------------------------------------------------------------------------
# disk, wedge, slab


def disk_solution(n: int, R: float, x):
    """Torsion function of the ball B(0, R) in R^n: (R^2 - |x|^2)/(2n)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 > R * R * (1 + 1e-12)):
        raise OutOfDomain("point outside the ball")
    out = np.clip(R * R - r2, 0.0, None) / (2 * n)
    return float(out) if np.ndim(out) == 0 else out


def triangle_barrier(theta: float, x, y):
    """Supersolution 1/2 y (x tan(theta) - y) on the wedge 0 < y < x tan(theta).

    Needs 0 < theta < pi/2. The function vanishes on both legs and
    -Laplace = 1, so it dominates the torsion function of any domain
    contained in the wedge.
    """
    if not (0 < theta < np.pi / 2):
        raise DomainError("wedge angle must lie in (0, pi/2)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tt = np.tan(theta)
    scale = np.maximum(1.0, np.abs(x))
    if np.any(y < -1e-12 * scale) or np.any(y > x * tt + 1e-12 * scale):
        raise OutOfDomain("point outside the wedge")
    out = np.clip(0.5 * y * (x * tt - y), 0.0, None)
    return float(out) if out.ndim == 0 else out


def slab_barrier(epsilon: float, x_n):
    """Torsion function of the slab |x_n| < epsilon: (epsilon^2 - x_n^2)/2."""
    x_n = np.asarray(x_n, dtype=float)
    out = 0.5 * (epsilon * epsilon - x_n * x_n)
    return float(out) if out.ndim == 0 else out


def slab_beta_integral(epsilon: float, beta: float) -> float:
    """int_{-eps}^{eps} slab_barrier^{-beta} = 2^{1+beta} I_beta eps^{1-2 beta}, I_beta = B(1/2,1-beta)/2."""
    _check_beta(beta)
    return 2.0 ** (1 + beta) * 0.5 * beta_fn(0.5, 1 - beta) * epsilon ** (1 - 2 * beta)


# ---------------------------------------------------------------------------
# curvilinear channel and cusp


def curvilinear_eps_bound(beta: float) -> float:
    """Largest epsilon with -Laplace(y (eps x^k - y)) >= 1 on the unit channel."""
    if not (0.5 < beta < 1):
        raise InvalidArgument(f"beta must lie in (1/2, 1), got {beta}")
    return float(np.sqrt((2 * beta - 1) ** 2 / (2 * (1 - beta))))


def curvilinear_barrier(beta: float, epsilon: float, x, y):
    """Supersolution y (eps x^k - y), k = 1/(2 beta - 1), on 0 < y < eps x^k, 0 < x < 1."""
    bound = curvilinear_eps_bound(beta)
    if epsilon > bound * (1 + 1e-12):
        raise InvalidArgument(f"epsilon={epsilon} exceeds the admissible bound {bound:.6g}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = 1.0 / (2 * beta - 1)
    top = epsilon * np.power(np.clip(x, 0, None), k)
    if np.any(x < 0) or np.any(x > 1 + 1e-12) or np.any(y < -1e-12) or np.any(y > top + 1e-12):
        raise OutOfDomain("point outside the curvilinear channel")
    out = np.clip(y * (top - y), 0.0, None)
    return float(out) if out.ndim == 0 else out


def curvilinear_truncated_integral(beta: float, epsilon: float, delta: float) -> float:
    """int over {x > delta} of the curvilinear barrier to the power -beta."""
    return epsilon ** (1 - 2 * beta) * beta_fn(1 - beta, 1 - beta) * np.log(1.0 / delta)


def cusp_barrier(profile: CuspProfile, x, n: int = 2):
    """Supersolution eps^2 F(x_n)^2 - |x'|^2 on the cusp {|x'| < eps F(x_n)}.

    ``x`` has shape (..., n); the last coordinate is x_n.
    """
    x = np.asarray(x, dtype=float)
    xp = x[..., :-1]
    xn = x[..., -1]
    w = profile.epsilon * profile(xn)
    r2 = np.sum(xp * xp, axis=-1)
    if np.any(xn < 0) or np.any(xn > profile.eta * (1 + 1e-12)) or np.any(r2 > w * w * (1 + 1e-9) + 1e-300):
        raise OutOfDomain("point outside the cusp")
    out = np.clip(w * w - r2, 0.0, None)
    return float(out) if np.ndim(out) == 0 else out


def cusp_barrier_laplacian(profile: CuspProfile, x_n, n: int = 2):
    """-Laplace of the cusp barrier: 2(n-1) - eps^2 (F^2)''(x_n)."""
    return 2 * (n - 1) - profile.epsilon**2 * profile.second_derivative_of_square(x_n)


# ---------------------------------------------------------------------------
# convex corner pair


def convex_corner_pair(theta: float, r: float, x):
    """Tangent-ball subsolution v and harmonic corner function w at a convex corner.

    The corner is at the origin with bisector along +x, half-aperture
    ``theta`` in (0, pi/2). ``v`` is the torsion function of the ball
    centred at (r/cos(theta), 0) of radius r tan(theta), which touches both
    legs at distance r from the apex; ``w = rho^{a} cos(a omega)``,
    ``a = pi/(2 theta)``.
    """
    if not (0 < theta < np.pi / 2):
        raise DomainError("theta must lie in (0, pi/2)")
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    rho = np.hypot(x1, x2)
    omega = np.arctan2(x2, x1)
    if np.any(np.abs(omega) > theta * (1 + 1e-12)) or np.any(rho > r * (1 + 1e-12)):
        raise OutOfDomain("point outside the sector")
    a = np.pi / (2 * theta)
    v = 0.25 * (r * r * np.tan(theta) ** 2 - (x1 - r / np.cos(theta)) ** 2 - x2 * x2)
    w = rho**a * np.cos(a * omega)
    if np.ndim(v) == 0:
        return float(v), float(w)
    return v, w


def convex_corner_ratio_sup(theta: float, r: float) -> float:
    """sup over the arc rho = r of w/v, by bounded 1-D maximisation."""
    a = np.pi / (2 * theta)
    f = lambda om: -np.cos(a * om) / (np.cos(om) - np.cos(theta))
    res = minimize_scalar(f, bounds=(0.0, theta * (1 - 1e-9)), method="bounded", options={"xatol": 1e-12})
    m = max(-res.fun, -f(0.0), a / np.sin(theta))
    return 2 * np.cos(theta) * r ** (a - 2) * m


def calibrate_convex_corner_constant(n_theta: int = 400) -> float:
    """Smallest c with sup w/v <= c theta^{-2} cos(theta) r^{a-2} over a theta grid."""
    thetas = np.linspace(1e-3, np.pi / 2 - 1e-6, n_theta)
    vals = [convex_corner_ratio_sup(t, 1.0) * t * t / np.cos(t) for t in thetas]
    return float(max(vals))


# Calibrated once with calibrate_convex_corner_constant(); the supremum is
# approached as theta -> pi/2 at omega = 0 and equals pi^2/2 there.
CONVEX_CORNER_C = float(np.pi**2 / 2)


# ---------------------------------------------------------------------------
# regular polygons


def regular_polygon_bounds(N: int, beta: float) -> dict:
    """Rigorous two-sided bounds on the beta-integral of the regular N-gon of inradius 1.

    Lower: u <= (cos(pi/N)^{-2} - |x|^2)/4 on the polygon, integrated over the
    unit disk. Upper: the incircle carries u >= (1 - |x|^2)/4, and the N
    corner kites outside it lie in sectors of half-aperture pi/2 - pi/N and
    radius tan(pi/N) at the vertices; on each such sector u dominates both the
    sector subsolution and a multiple of the harmonic corner function.
    """
    _check_beta(beta)
    if N < 4:
        raise InvalidArgument("N must be at least 4")
    L = 4.0**beta * np.pi / (1 - beta)
    c = np.cos(np.pi / N)
    s = np.sin(np.pi / N)
    lower = L * c ** (-2 * (1 - beta)) * (1 - s ** (2 * (1 - beta)))
    theta = np.pi / 2 - np.pi / N
    r = np.tan(np.pi / N)
    corner_sector = sector_constant(theta, beta) * r ** (2 * (1 - beta))
    a = np.pi / (2 * theta)
    # K = inf_omega v(r, omega) / w(r, omega)
    K = 1.0 / convex_corner_ratio_sup(theta, r)
    w_int = r ** (2 - a * beta) / (2 - a * beta) * (2 * theta / np.pi) * beta_fn(0.5, (1 - beta) / 2)
    corner_harm = K ** (-beta) * w_int
    corner = min(corner_sector, corner_harm)
    return {"lower": float(lower), "upper": float(L + N * corner), "limit": float(L), "corner": float(corner)}
