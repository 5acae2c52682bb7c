import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from nltgauss import nonlinearities as nl
from nltgauss.distributions import ClassAParams, Gaussian, Mixture, MixtureSpec, class_a_mixture
from nltgauss.gains import Scenario
from nltgauss.rng import make_generator

CLASS_A = class_a_mixture(ClassAParams(0.01, 0.01, 1.0))

CATALOG = [
    nl.Identity(),
    nl.Scale(-1.7),
    nl.SoftLimiter(0.8),
    nl.Blanker(1.3),
    nl.MixtureMmse(1.0, CLASS_A),
    nl.MixtureMmse(2.0, MixtureSpec((0.6, 0.4), (0.5, 3.0))),
    nl.Tabulated((-2.0, -1.0, 0.0, 1.0, 2.0), (-1.5, -1.0, 0.0, 1.0, 1.5)),
]


def test_reference_evaluations():
    assert nl.evaluate(nl.SoftLimiter(1.0), 0.5) == 0.5
    assert nl.evaluate(nl.SoftLimiter(1.0), -3.0) == -1.0
    assert nl.evaluate(nl.Blanker(1.0), 2.0) == 0.0
    assert nl.evaluate(nl.Blanker(1.0), 1.0) == 0.0
    assert nl.evaluate(nl.Blanker(1.0), -0.999) == -0.999


@pytest.mark.parametrize("g", CATALOG, ids=lambda g: g.kind)
def test_catalog_is_odd(g):
    y = make_generator(1).normal(0.0, 3.0, 1000)
    y = y[np.abs(y) <= 2.0] if g.kind == "tabulated" else y
    np.testing.assert_allclose(g(-y), -g(y), rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(th=st.floats(1e-3, 1e3), y=st.floats(-1e6, 1e6))
def test_limiter_and_blanker_closed_forms(th, y):
    sl, bn = nl.SoftLimiter(th), nl.Blanker(th)
    assert abs(float(sl(y))) <= th
    if abs(y) < th:
        assert float(sl(y)) == y and float(bn(y)) == y
    else:
        assert float(sl(y)) == math.copysign(th, y)
        assert float(bn(y)) == 0.0


def test_threshold_must_be_positive():
    for cls in (nl.SoftLimiter, nl.Blanker):
        with pytest.raises(ValueError):
            cls(0.0)


def test_blanker_refuses_derivative():
    with pytest.raises(nl.JumpDiscontinuityError):
        nl.Blanker(1.0).derivative(np.array([0.0]))


# --- conditional-mean estimator --------------------------------------------------------


def test_mmse_single_component_is_linear_wiener_gain():
    g = nl.mixture_mmse(2.0, MixtureSpec((1.0,), (3.0,)))
    y = np.linspace(-50, 50, 101)
    np.testing.assert_allclose(g(y), 0.4 * y, rtol=1e-15, atol=0)
    assert float(g(0.0)) == 0.0


@settings(max_examples=100, deadline=None)
@given(y=st.floats(-1e3, 1e3, allow_nan=False))
def test_mmse_gain_factor_is_bounded_by_component_gains(y):
    g = CATALOG[4]
    c = 1.0 / (1.0 + np.asarray(g.noise.variances))
    h = float(g.gain_factor(y))
    assert c.min() - 1e-15 <= h <= c.max() + 1e-15


def _mmse_mp(sx2, mix, y, dps=60):
    mpmath.mp.dps = dps
    num = den = mpmath.mpf(0)
    y = mpmath.mpf(y)
    for b, v in zip(mix.weights, mix.variances):
        s = mpmath.mpf(sx2) + mpmath.mpf(v)
        dens = mpmath.mpf(b) * mpmath.exp(-y * y / (2 * s)) / mpmath.sqrt(2 * mpmath.pi * s)
        num += mpmath.mpf(sx2) / s * dens
        den += dens
    return num / den * y


@pytest.mark.parametrize("scale", [0.3, 2.0, 20.0])
def test_mmse_matches_high_precision_oracle(scale):
    sy = math.sqrt(1.0 + CLASS_A.total_variance())
    g = nl.MixtureMmse(1.0, CLASS_A)
    y = scale * sy
    assert float(g(y)) == pytest.approx(float(_mmse_mp(1.0, CLASS_A, y)), rel=1e-12)


def test_mmse_tail_tends_to_widest_component_gain():
    g = nl.MixtureMmse(1.0, CLASS_A)
    widest = 1.0 / (1.0 + max(CLASS_A.variances))
    sy = math.sqrt(2.0)
    # far tail: the largest-variance term dominates
    assert float(g.gain_factor(1e3 * sy)) == pytest.approx(widest, rel=1e-12)
    # y^2 overflows: explicit fallback
    assert float(g.gain_factor(1e200)) == widest
    assert float(g(-1e200)) == pytest.approx(-1e200 * widest)


def test_mmse_derivative_matches_finite_difference():
    g = CATALOG[5]
    y = np.linspace(-6, 6, 25)
    h = 1e-6
    fd = (g(y + h) - g(y - h)) / (2 * h)
    np.testing.assert_allclose(g.derivative(y), fd, rtol=1e-6, atol=1e-8)


def test_mmse_equals_binned_conditional_mean():
    mix = MixtureSpec((0.8, 0.2), (0.2, 5.0))
    g = nl.MixtureMmse(1.0, mix)
    sc = Scenario(Gaussian(1.0), Mixture(mix), g)
    x, n = sc.sample(make_generator(21), 2 * 10**6)
    y = x + n
    edges = np.quantile(y, np.linspace(0.05, 0.95, 21))
    idx = np.searchsorted(edges, y, side="right") - 1
    for b in range(20):
        m = idx == b
        d = x[m] - g(y[m])
        se = d.std(ddof=1) / math.sqrt(m.sum())
        assert abs(d.mean()) <= 3 * se


# --- tabulated -------------------------------------------------------------------------


def test_tabulated_interpolates_and_warns_outside():
    t = nl.Tabulated((0.0, 1.0, 3.0), (0.0, 2.0, 3.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        np.testing.assert_allclose(t(np.array([0.5, 2.0])), [1.0, 2.5])
    with pytest.warns(nl.TabulationRangeWarning):
        assert float(t(5.0)) == 3.0
    np.testing.assert_allclose(t.derivative(np.array([0.5, 2.0, 9.0])), [2.0, 0.5, 0.0])
    assert t.breakpoints == (0.0, 1.0, 3.0)


def test_tabulated_validation():
    with pytest.raises(ValueError):
        nl.Tabulated((0.0, 0.0), (1.0, 2.0))
    with pytest.raises(ValueError):
        nl.Tabulated((0.0,), (1.0,))
    with pytest.raises(ValueError):
        nl.Tabulated((0.0, 1.0), (1.0,))


# --- config -----------------------------------------------------------------------------


def test_from_config_round_trip_and_resolution():
    for g in (nl.Identity(), nl.Scale(2.0), nl.SoftLimiter(1.0), nl.Blanker(0.5), CATALOG[-1]):
        assert nl.from_config(g.to_config()) == g
    with pytest.raises(ValueError):
        nl.from_config({"kind": "mixture_mmse"})
    with pytest.raises(ValueError):
        nl.from_config({"kind": "blanker", "y_th": "optimal"})
    with pytest.raises(ValueError):
        nl.from_config({"kind": "cubic"})
    got = nl.from_config({"kind": "mixture_mmse"}, resolve=lambda what: nl.mixture_mmse(1.0, CLASS_A))
    assert isinstance(got, nl.MixtureMmse)


# --- blanker threshold search ----------------------------------------------------------


def _blanker_mse_closed_form(t, sx2, mix):
    """E{y^2 1{|y|<t}} = s[(2 Phi(z) - 1) - 2 z phi(z)], z = t / sqrt(s), per
    component; for the blanker g(y) y = g(y)^2."""
    e_g2 = 0.0
    k_x = 0.0
    for b, v in zip(mix.weights, mix.variances):
        s = sx2 + v
        z = t / math.sqrt(s)
        part = s * ((2 * norm.cdf(z) - 1) - 2 * z * norm.pdf(z))
        e_g2 += b * part
        k_x += b * part / s
    return e_g2 + (1 - 2 * k_x) * sx2


def test_optimal_blanker_threshold_class_a_interior_minimum():
    res = nl.optimal_blanker_threshold(1.0, CLASS_A)
    assert not res.degraded
    sy = math.sqrt(2.0)
    # grid-scan oracle on the closed form
    grid = np.geomspace(0.5 * sy, 5 * sy, 20001)
    vals = np.array([_blanker_mse_closed_form(t, 1.0, CLASS_A) for t in grid])
    t_ref = grid[int(np.argmin(vals))]
    assert res.threshold == pytest.approx(t_ref, rel=1e-3)
    assert res.mse == pytest.approx(_blanker_mse_closed_form(res.threshold, 1.0, CLASS_A), rel=1e-9)
    # better than passing Y through unchanged (MSE = noise power = 1)
    assert res.mse < 1.0
    for f in (1 - 1e-3, 1 + 1e-3):
        assert _blanker_mse_closed_form(res.threshold * f, 1.0, CLASS_A) >= res.mse


def test_optimal_blanker_threshold_gaussian_noise_is_monotone():
    # Gaussian noise: MSE = sx2 + E{Y^2 1{|Y|<t}} (1 - 2 sx2 / sy2) is monotone in t,
    # so the scan ends on a boundary and flags the result
    up = nl.optimal_blanker_threshold(1.0, MixtureSpec((1.0,), (0.5,)))
    assert up.degraded
    assert up.threshold == pytest.approx(10 * math.sqrt(1.5))
    assert up.mse == pytest.approx(0.5, rel=1e-9)
    down = nl.optimal_blanker_threshold(1.0, MixtureSpec((1.0,), (2.0,)))
    assert down.degraded
    assert down.threshold == pytest.approx(1e-3 * math.sqrt(3.0))


def test_optimal_blanker_threshold_vanishing_source():
    res = nl.optimal_blanker_threshold(1e-8, CLASS_A)
    assert res.degraded and res.threshold == pytest.approx(1e-3 * math.sqrt(1.0 + 1e-8))
    assert res.mse < 2e-8
