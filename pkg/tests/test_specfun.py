import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.errors import DomainError
from torsionlab.specfun import beta_fn, cap_eigen, corner_exponent, gamma_fn, gegenbauer_eval


def test_gamma_beta_against_stdlib():
    for x in (0.1, 0.5, 1.0, 3.7, 10.0):
        assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-14)
    assert beta_fn(0.5, 0.5) == pytest.approx(math.pi, rel=1e-14)
    assert beta_fn(2.0, 3.0) == pytest.approx(1 / 12, rel=1e-14)
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(DomainError):
            gamma_fn(bad)
    with pytest.raises(DomainError):
        beta_fn(1.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.05, 20.0),
    st.sampled_from([0.0, 0.5, 1.0, 1.5, 5.0]),
    st.floats(-0.999, 0.95),
)
def test_gegenbauer_matches_hypergeometric(alpha, nu, z):
    # zeroprec: some parameter choices hit an exact zero of the series
    ref = float(mpmath.hyp2f1(-alpha, alpha + 2 * nu, nu + 0.5, (1 + z) / 2, zeroprec=64))
    val = gegenbauer_eval(alpha, nu, z)
    assert val == pytest.approx(ref, rel=1e-8, abs=1e-9)


def test_gegenbauer_vectorised_and_endpoints():
    z = np.array([0.3, -1.0, -0.5, 0.9])
    v = gegenbauer_eval(2.5, 0.5, z)
    assert v.shape == (4,)
    assert v[1] == 1.0
    assert v[0] == pytest.approx(gegenbauer_eval(2.5, 0.5, 0.3), rel=1e-12)
    # integer alpha with nu = 1/2 is a Legendre polynomial normalised at -1
    for k in (1, 2, 3):
        assert gegenbauer_eval(float(k), 0.5, 1.0) == pytest.approx((-1) ** k, abs=1e-12)
    with pytest.raises(DomainError):
        gegenbauer_eval(1.0, -0.1, 0.0)
    with pytest.raises(DomainError):
        gegenbauer_eval(1.0, 0.5, 1.5)


@pytest.mark.parametrize("theta", [0.2, 0.7, np.pi / 2, 2.5, 3.0])
def test_closed_forms_match_numeric(theta):
    a2 = corner_exponent(2, theta, force_numeric=True).alpha
    a4 = corner_exponent(4, theta, force_numeric=True).alpha
    assert a2 == pytest.approx(np.pi / (2 * theta), abs=1e-7)
    assert a4 == pytest.approx(np.pi / theta - 1, abs=1e-7)


def test_exponent_landmarks_and_lambda():
    for n in range(2, 6):
        assert corner_exponent(n, np.pi / 2, force_numeric=True).alpha == pytest.approx(1.0, abs=1e-8)
        ce = corner_exponent(n, np.arccos(1 / np.sqrt(n)), force_numeric=True)
        assert ce.alpha == pytest.approx(2.0, abs=1e-8)
        assert ce.lam == pytest.approx(2 * n, abs=1e-7)


def test_exponent_monotone_and_flat_limit():
    thetas = np.linspace(0.3, 3.0, 10)
    alphas = [corner_exponent(3, t).alpha for t in thetas]
    assert np.all(np.diff(alphas) < 0)
    # slow approach to 0 as the cone opens to a slit
    assert corner_exponent(3, 0.99 * np.pi).alpha < 0.13
    assert corner_exponent(3, 0.999 * np.pi).alpha < 0.1


def test_exponent_domain_errors():
    with pytest.raises(DomainError):
        corner_exponent(1, 1.0)
    with pytest.raises(DomainError):
        corner_exponent(3, np.pi)


@pytest.mark.parametrize("n,theta", [(3, 0.5), (3, np.pi / 2), (4, 1.2), (5, 2.0)])
def test_cap_eigen_residual_and_normalisation(n, theta):
    cap = cap_eigen(n, theta)
    assert cap.residual() <= 1e-6
    assert cap.samples[-1] == 0.0
    assert np.max(cap(np.linspace(0, theta, 2001))) == pytest.approx(1.0, abs=1e-6)
    assert np.all(cap.samples[:-1] > 0)


def test_cap_eigen_hemisphere_is_cosine():
    cap = cap_eigen(3, np.pi / 2)
    t = np.linspace(0, np.pi / 2, 50)
    assert cap(t) == pytest.approx(np.cos(t), abs=1e-9)
    c2 = cap_eigen(2, 1.0)
    assert c2(0.5) == pytest.approx(np.cos(np.pi / 4), abs=1e-15)
