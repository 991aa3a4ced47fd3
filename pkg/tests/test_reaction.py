import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import integrate
from hypothesis import strategies as st

from patchfront.errors import ConfigError
from patchfront.reaction import (Kind, MassSign, NoBalancedThreshold, Reaction, Verdict,
                                 classify, mass, parse_reaction, rescale, theta_star)
from patchfront.reaction import eval as f_eval

L = Reaction.logistic
C = Reaction.cubic

cubics = st.tuples(st.floats(0.5, 5.0), st.floats(0.05, 0.95)).map(
    lambda p: C(p[0], p[0] * p[1]))


# --- eval -------------------------------------------------------------------

def test_eval_examples():
    assert f_eval(L(1), 0.0) == 0.0
    assert f_eval(C(4, 1), 1.0) == 0.0
    assert f_eval(C(4, 1), 2.0) == 4.0


def test_eval_vectorised():
    u = np.linspace(0, 4, 9)
    np.testing.assert_array_equal(C(4, 1)(u), u * (4 - u) * (u - 1))


def test_invalid_parameters():
    with pytest.raises(ConfigError):
        L(0)
    with pytest.raises(ConfigError):
        C(4, 5)
    with pytest.raises(ConfigError):
        C(4, 1, amplitude=-1)


def test_custom_requires_declared_bound():
    f = lambda u: u * (1 - u)
    df = lambda u: 1 - 2 * u
    r = Reaction.custom(f, df, K=1.0, lipschitz_K=1.0)
    assert r.classify().verdict is Verdict.KPP
    with pytest.raises(ConfigError):
        Reaction.custom(f, df, K=1.0, lipschitz_K=0.5)


# --- mass -------------------------------------------------------------------

@given(cubics)
@settings(max_examples=60, deadline=None)
def test_cubic_mass_closed_form(r):
    K, th = r.K, r.theta
    exact = K ** 3 / 12 * (K - 2 * th)
    assert abs(mass(r, 0, K) - exact) < 1e-12 * max(1.0, K ** 4)
    quad, _ = integrate.quad(lambda s: s * (K - s) * (s - th), 0, K, epsabs=1e-13)
    assert abs(quad - exact) < 1e-12 * max(1.0, K ** 4)
    # the general antiderivative path agrees on a split interval
    mid = 0.5 * K
    assert abs(mass(r, 0, mid) + mass(r, mid, K) - exact) < 1e-12 * max(1.0, K ** 4)


def test_mass_examples():
    assert abs(mass(C(4, 2), 0, 4)) < 1e-12
    assert mass(L(1), 0.3, 0.3) == 0.0
    with pytest.raises(ConfigError):
        mass(L(1), 1.0, 0.0)


def test_custom_mass_quadrature_matches_cubic():
    c = C(3, 1)
    r = Reaction.custom(lambda u: c(u), lambda u: c.deriv(u), K=3.0,
                        lipschitz_K=c.lipschitz_K, theta=1.0)
    assert abs(r.mass(0, 3) - c.mass(0, 3)) < 1e-12


# --- theta_star -------------------------------------------------------------

def test_theta_star_closed_form():
    assert abs(theta_star(C(4, 1)) - (10 - 2 * math.sqrt(7)) / 3) < 1e-10


def test_theta_star_bisection_example():
    ts = theta_star(C(2, 0.5))
    assert 0.5 < ts < 2
    assert abs(C(2, 0.5).mass(0, ts)) < 1e-12


def test_theta_star_requires_positive_mass():
    with pytest.raises(NoBalancedThreshold):
        theta_star(C(4, 2))
    with pytest.raises(NoBalancedThreshold):
        theta_star(C(4, 3))


@given(cubics)
@settings(max_examples=60, deadline=None)
def test_theta_star_properties(r):
    if r.mass_sign() is not MassSign.POSITIVE:
        return
    ts = theta_star(r)
    assert r.theta < ts < r.K
    assert abs(r.mass(0, ts)) < 1e-12


# --- classify ---------------------------------------------------------------

def test_classify_examples():
    assert classify(L(1)).verdict is Verdict.KPP
    c = classify(C(4, 3))
    assert c.verdict is Verdict.BISTABLE and c.mass_sign is MassSign.NEGATIVE
    assert c.theta_star is None
    c = classify(C(4, 2))
    assert c.verdict is Verdict.BISTABLE and c.mass_sign is MassSign.ZERO
    c = classify(C(4, 1))
    assert c.mass_sign is MassSign.POSITIVE and 1 < c.theta_star < 4


def test_classify_neither():
    # f > 0 above K violates both structures
    r = Reaction.custom(lambda u: u * (1 - u) * (2 - u) ** 2 / 4,
                        lambda u: ((1 - 2 * u) * (2 - u) ** 2 - 2 * u * (1 - u) * (2 - u)) / 4,
                        K=1.0, lipschitz_K=1.0)
    assert classify(r).verdict is Verdict.NEITHER


@pytest.mark.parametrize("k", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("r", [L(1), L(3), C(4, 1), C(4, 2), C(4, 3), C(1, 0.25)])
def test_classify_invariant_under_rescaling(r, k):
    a, b = classify(r), classify(rescale(r, k))
    assert a.verdict is b.verdict
    assert a.mass_sign is b.mass_sign


# --- rescale ----------------------------------------------------------------

def test_rescale_cubic_example():
    r = rescale(C(1, 0.25), 4.0)
    assert r.kind is Kind.CUBIC
    assert r.K == 4.0 and r.theta == 1.0
    # k f(s/k) carries the amplitude a/k^2
    assert r.amplitude == 1 / 16
    s = np.linspace(0, 4, 17)
    np.testing.assert_allclose(r(s), 4 * C(1, 0.25)(s / 4), rtol=0, atol=1e-15)


def test_rescale_identity():
    r = C(4, 1)
    assert rescale(r, 1.0).same_as(r)


@given(cubics, st.floats(0.05, 20.0))
@settings(max_examples=60, deadline=None)
def test_rescale_preserves_mass_sign(r, k):
    g = rescale(r, k)
    assert np.sign(g.mass(0, k * r.K)) == np.sign(r.mass(0, r.K))
    assert g.mass_sign() is r.mass_sign()


def test_rescale_custom():
    r = Reaction.custom(lambda u: u * (1 - u), lambda u: 1 - 2 * u, K=1.0, lipschitz_K=1.0)
    g = rescale(r, 2.0)
    assert g.K == 2.0
    assert abs(g(1.0) - 2 * r(0.5)) < 1e-15


# --- derivative consistency and metadata -------------------------------------

@pytest.mark.parametrize("r", [L(2), C(4, 1), C(1, 0.6, amplitude=3.0)])
def test_deriv_central_difference_second_order(r):
    rng = np.random.default_rng(7)
    u = rng.uniform(0, r.K, 100)
    errs = []
    for h in (1e-2, 5e-3):
        errs.append(np.abs((r(u + h) - r(u - h)) / (2 * h) - r.deriv(u)))
    # the central-difference error of a cubic is exactly f'''h^2/6, so halving h quarters it
    mask = errs[0] > 1e-12
    if np.any(mask):
        np.testing.assert_allclose(errs[1][mask] / errs[0][mask], 0.25, rtol=1e-3)
    else:
        assert np.all(errs[1] < 1e-12)


def test_lipschitz_constants():
    assert L(5).lipschitz_K == 1.0
    r = C(4, 1)
    s = np.linspace(1e-6, 8, 10_000)
    assert r.lipschitz_K >= np.max(r(s) / s) - 1e-12


def test_zeros_at_zero_and_K():
    for r in (L(2), C(4, 1), C(0.4, 0.2)):
        assert abs(r(0.0)) < 1e-12 and abs(r(r.K)) < 1e-12


def test_parse_and_emit_round_trip():
    for txt in ("logistic(K=1)", "cubic(K=4, theta=1)", "cubic(K=4.0, theta=1.0, amplitude=0.0625)"):
        r = parse_reaction(txt)
        assert parse_reaction(r.to_config()).same_as(r)
    for bad in ("logistic(K=1", "quartic(K=1)", "cubic(K=4, theta=x)", "cubic(K=4)"):
        with pytest.raises(ConfigError):
            parse_reaction(bad)
