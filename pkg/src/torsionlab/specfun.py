"""Gamma/Beta wrappers, the Gegenbauer initial-value problem, corner exponents
and first Dirichlet eigenpairs of spherical caps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationFailure, SearchFailure

__all__ = [
    "gamma_fn",
    "beta_fn",
    "gegenbauer_eval",
    "corner_exponent",
    "cap_eigen",
    "CornerExponent",
    "CapEigenfunction",
]

SERIES_ORDER = 8
SERIES_S0 = 1e-3


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x > 0``."""
    if not (np.isfinite(x) and x > 0):
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    return float(special.gamma(x))


def beta_fn(x: float, y: float) -> float:
    """Euler Beta function B(x, y) for ``x, y > 0``."""
    if not (np.isfinite(x) and np.isfinite(y) and x > 0 and y > 0):
        raise DomainError(f"beta_fn requires positive arguments, got ({x}, {y})")
    return float(special.beta(x, y))


def _series_coeffs(alpha, nu, order=SERIES_ORDER):
    """Taylor coefficients in s = 1 + z of the solution regular at z = -1.

    Substituting z = s - 1 turns (1 - z^2) g'' - (2 nu + 1) z g' + lam g = 0
    into s(2 - s) g'' + (2 nu + 1)(1 - s) g' + lam g = 0, whence the two-term
    recurrence below.
    """
    lam = alpha * (alpha + 2 * nu)
    a = np.zeros(order + 1)
    a[0] = 1.0
    for k in range(order):
        a[k + 1] = (k * (k - 1) + (2 * nu + 1) * k - lam) * a[k] / ((k + 1) * (2 * k + 2 * nu + 1))
    return a


def _series_eval(a, s):
    val = np.polynomial.polynomial.polyval(s, a)
    der = np.polynomial.polynomial.polyval(s, np.arange(1, len(a)) * a[1:])
    return val, der


def _gegenbauer_path(alpha, nu, z_targets, rtol=1e-13, atol=1e-14):
    """Values of g at sorted targets in (-1, 1); series then DOP853."""
    z_targets = np.asarray(z_targets, dtype=float)
    a = _series_coeffs(alpha, nu)
    out = np.empty_like(z_targets)
    near = z_targets <= -1 + SERIES_S0
    if np.any(near):
        out[near] = _series_eval(a, z_targets[near] + 1)[0]
    far = ~near
    if not np.any(far):
        return out
    z0 = -1 + SERIES_S0
    g0, d0 = _series_eval(a, SERIES_S0)
    lam = alpha * (alpha + 2 * nu)

    def rhs(z, y):
        return [y[1], ((2 * nu + 1) * z * y[1] - lam * y[0]) / (1 - z * z)]

    zf = z_targets[far]
    order = np.argsort(zf)
    zs = zf[order]
    z_end = float(zs[-1])
    sol = solve_ivp(rhs, (z0, z_end), [g0, d0], method="DOP853", rtol=rtol, atol=atol, t_eval=zs, dense_output=False)
    if not sol.success:
        raise IntegrationFailure(f"Gegenbauer integration failed: {sol.message}")
    vals = np.empty_like(zs)
    vals[:] = sol.y[0]
    res = np.empty_like(zf)
    res[order] = vals
    out[far] = res
    return out


def gegenbauer_eval(alpha: float, nu: float, z):
    """Solution of Gegenbauer's equation normalised at the singular end.

    Solves ``(1 - z^2) g'' - (2 nu + 1) z g' + alpha (alpha + 2 nu) g = 0``
    with ``g(-1) = 1`` and ``g'(-1) = -alpha (alpha + 2 nu) / (2 nu + 1)``.
    An order-8 Taylor expansion about ``z = -1`` is used up to
    ``z = -1 + 1e-3``; beyond that an 8th-order Runge-Kutta integrator takes
    over. ``z = 1`` is a regular singular point, so the value there is the
    limit obtained from the hypergeometric representation.

    Parameters
    ----------
    alpha : float
    nu : float, ``>= 0``
    z : float or array in ``(-1, 1]``

    Returns
    -------
    float or ndarray
    """
    if nu < 0:
        raise DomainError(f"nu must be non-negative, got {nu}")
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr < -1) or np.any(z_arr > 1):
        raise DomainError("z must lie in [-1, 1]")
    out = np.empty_like(z_arr)
    at_one = z_arr >= 1.0
    if np.any(at_one):
        out[at_one] = special.hyp2f1(-alpha, alpha + 2 * nu, nu + 0.5, 1.0)
    rest = ~at_one
    if np.any(rest):
        out[rest] = _gegenbauer_path(alpha, nu, z_arr[rest])
    if np.ndim(z) == 0:
        return float(out[0])
    return out


@dataclass(frozen=True)
class CornerExponent:
    """Corner exponent alpha with cap eigenvalue lambda = alpha (alpha + n - 2)."""

    n: int
    theta: float
    alpha: float
    lam: float

    @property
    def lambda_(self) -> float:
        return self.lam


def _check_angle(n, theta):
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n}")
    if not (0 < theta < np.pi):
        raise DomainError(f"theta must lie in (0, pi), got {theta}")


def corner_exponent(n: int, theta: float, force_numeric: bool = False, tol: float = 1e-8) -> CornerExponent:
    """First positive zero of ``alpha -> g_alpha(-cos theta)`` with nu = (n-2)/2.

    Closed forms are used for ``n = 2`` (``pi/(2 theta)``) and ``n = 4``
    (``pi/theta - 1``) unless ``force_numeric`` is set. Results are memoised.
    """
    _check_angle(n, theta)
    return _corner_exponent(int(n), float(theta), bool(force_numeric), float(tol))


@lru_cache(maxsize=1024)
def _corner_exponent(n, theta, force_numeric, tol):
    if n == 2 and not force_numeric:
        a = np.pi / (2 * theta)
        return CornerExponent(n, theta, a, a * a)
    if n == 4 and not force_numeric:
        a = np.pi / theta - 1
        return CornerExponent(n, theta, a, a * (a + 2))
    nu = (n - 2) / 2.0
    z = -np.cos(theta)
    f = lambda al: gegenbauer_eval(al, nu, z)
    lo = 0.01
    flo = f(lo)
    hi = lo
    while True:
        hi = lo + 0.25
        if hi > 100:
            raise SearchFailure(f"no sign change of the Gegenbauer map below alpha=100 (n={n}, theta={theta})")
        fhi = f(hi)
        if np.sign(fhi) != np.sign(flo) or fhi == 0:
            break
        lo, flo = hi, fhi
    for _ in range(200):
        if hi - lo <= tol * 1e-2:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            lo = hi = mid
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    return CornerExponent(n, theta, a, a * (a + n - 2))


@dataclass(frozen=True)
class CapEigenfunction:
    """First Dirichlet eigenfunction of the geodesic cap of half-angle theta.

    ``phi`` is a vectorised callable on ``[0, theta]`` with ``max phi = 1``;
    ``t`` and ``samples`` hold the tabulated values on the colatitude grid.
    """

    n: int
    theta: float
    lam: float
    alpha: float
    t: np.ndarray
    samples: np.ndarray
    phi: Callable

    def __call__(self, t):
        return self.phi(t)

    def residual(self) -> float:
        """Max-norm residual of the colatitude ODE on interior grid points.

        Uses fourth-order central differences of the dense callable with a
        step tied to the grid spacing; points within five steps of the pole
        are skipped for n >= 3 because the ODE coefficient blows up there.
        """
        n, lam = self.n, self.lam
        h = min(1e-3, self.theta / 200)
        t = self.t[1:-1]
        t = t[(t > 5 * h) & (t < self.theta - 2 * h)] if n > 2 else t[(t > 2 * h) & (t < self.theta - 2 * h)]
        p = self.phi
        d1 = (-p(t + 2 * h) + 8 * p(t + h) - 8 * p(t - h) + p(t - 2 * h)) / (12 * h)
        d2 = (-p(t + 2 * h) + 16 * p(t + h) - 30 * p(t) + 16 * p(t - h) - p(t - 2 * h)) / (12 * h * h)
        res = d2 + (n - 2) * np.cos(t) / np.sin(t) * d1 + lam * p(t)
        return float(np.max(np.abs(res))) if len(res) else 0.0


def cap_eigen(n: int, theta: float, grid: int = 256) -> CapEigenfunction:
    """First eigenpair of -Laplace-Beltrami on the cap {t < theta} of S^{n-1}.

    The axisymmetric eigenfunction is ``g(-cos t)`` with ``g`` the Gegenbauer
    solution at the corner exponent; it is rescaled to sup 1. For ``n = 2``
    the exact ``cos(pi t / (2 theta))`` is returned.
    """
    _check_angle(n, theta)
    if grid < 64:
        raise DomainError("grid must be at least 64")
    n = int(n)
    ce = corner_exponent(n, theta)
    t = np.linspace(0.0, theta, grid + 1)
    if n == 2:
        k = np.pi / (2 * theta)
        phi = lambda s: np.cos(k * np.asarray(s, dtype=float))
        samples = phi(t)
        samples[-1] = 0.0
        return CapEigenfunction(n, theta, ce.lam, ce.alpha, t, samples, phi)
    nu = (n - 2) / 2.0
    alpha = ce.alpha
    # Dense table for interpolation-free evaluation: evaluate the IVP on a fine
    # grid, then wrap a cubic Hermite interpolant with exact derivatives.
    from scipy.interpolate import CubicHermiteSpline

    tt = np.linspace(0.0, theta, 8 * grid + 1)
    z = -np.cos(tt)
    lam = ce.lam
    a = _series_coeffs(alpha, nu)
    g = np.empty_like(tt)
    dg = np.empty_like(tt)
    near = z <= -1 + SERIES_S0
    g[near], dg[near] = _series_eval(a, z[near] + 1)
    if np.any(~near):
        g0, d0 = _series_eval(a, SERIES_S0)

        def rhs(zz, y):
            return [y[1], ((2 * nu + 1) * zz * y[1] - lam * y[0]) / (1 - zz * zz)]

        sol = solve_ivp(
            rhs, (-1 + SERIES_S0, float(z[~near][-1])), [g0, d0], method="DOP853",
            rtol=1e-13, atol=1e-14, t_eval=z[~near],
        )
        if not sol.success:
            raise IntegrationFailure(sol.message)
        g[~near], dg[~near] = sol.y
    # chain rule: d/dt g(-cos t) = sin(t) g'(z)
    dphi = np.sin(tt) * dg
    spline = CubicHermiteSpline(tt, g, dphi)
    scale = float(np.max(g))
    g_end = float(g[-1])

    def phi(s):
        s = np.asarray(s, dtype=float)
        # subtract the tiny end value (root tolerance) so phi(theta) = 0 exactly
        return (spline(s) - g_end * s / theta) / scale

    samples = phi(t)
    samples[-1] = 0.0
    return CapEigenfunction(n, theta, lam, alpha, t, samples, phi)
