import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nltgauss import gains as gn
from nltgauss.distributions import ClassAParams, Gaussian, Laplace, Mixture, MixtureSpec
from nltgauss.expectations import McSettings
from nltgauss.nonlinearities import Blanker, Identity, JumpDiscontinuityError, MixtureMmse, Scale, SoftLimiter

MC = McSettings(n_samples=10**6, seed=17)


def _class_a_scenario(snr_db=0.0, g=None, A=0.01, gamma=0.01):
    noise = Mixture.from_class_a(ClassAParams(A, gamma, 10 ** (-snr_db / 10)))
    sy = math.sqrt(1.0 + noise.variance)
    return gn.Scenario(Gaussian(1.0), noise, g or SoftLimiter(sy))


# --- single-fold gains ---------------------------------------------------------


def test_gain_gaussian_reference_values():
    assert gn.gain_gaussian(Identity(), 3.0).value == pytest.approx(1.0, abs=1e-12)
    assert gn.gain_gaussian(Scale(-2.5), 3.0).value == pytest.approx(-2.5, abs=1e-12)
    k = gn.gain_gaussian(SoftLimiter(1.0), 10.0)
    assert k.value == pytest.approx(math.erf(1.0 / math.sqrt(20.0)), rel=1e-12)
    assert k.std_error == 0.0


@settings(max_examples=30, deadline=None)
@given(th=st.floats(0.05, 10.0), var=st.floats(0.05, 50.0))
def test_derivative_route_matches_correlation_route(th, var):
    g = SoftLimiter(th)
    via_derivative = gn.gain_scarano_crosscheck(g, var).value
    assert via_derivative == pytest.approx(math.erf(th / math.sqrt(2 * var)), abs=1e-10)
    assert via_derivative == pytest.approx(gn.gain_gaussian(g, var).value, abs=1e-8)


def test_derivative_route_linear_and_refusal():
    assert gn.gain_scarano_crosscheck(Identity(), 2.0).value == pytest.approx(1.0, abs=1e-12)
    assert gn.gain_scarano_crosscheck(Scale(0.3), 2.0).value == pytest.approx(0.3, abs=1e-12)
    mmse = MixtureMmse(1.0, MixtureSpec((0.9, 0.1), (0.1, 9.0)))
    assert gn.gain_scarano_crosscheck(mmse, 2.0).value == pytest.approx(gn.gain_gaussian(mmse, 2.0).value, rel=1e-8)
    with pytest.raises(JumpDiscontinuityError):
        gn.gain_scarano_crosscheck(Blanker(1.0), 2.0)


# --- mixture shortcuts ------------------------------------------------------------


def test_single_component_mixture_gives_equal_gains():
    sc = gn.Scenario(Gaussian(3.0), Mixture(MixtureSpec((1.0,), (7.0,))), SoftLimiter(1.0))
    gs = gn.gains_mixture(sc)
    assert gs.k_x.value == pytest.approx(gs.k_y.value, abs=1e-10)
    assert gs.k_n.value == pytest.approx(gs.k_y.value, abs=1e-10)
    assert gs.k_y.value == pytest.approx(math.erf(1.0 / math.sqrt(20.0)), rel=1e-12)


def test_identity_gains_are_one_for_any_mixture():
    gs = gn.gains_mixture(_class_a_scenario(g=Identity()))
    for k in (gs.k_y, gs.k_x, gs.k_n):
        assert k.value == pytest.approx(1.0, abs=1e-12)


def test_class_a_soft_limiter_gains_all_differ():
    gs = gn.gains_mixture(_class_a_scenario(0.0))
    ky, kx, kn = gs.k_y.value, gs.k_x.value, gs.k_n.value
    assert abs(ky - kx) > 1e-9 and abs(kx - kn) > 1e-9 and abs(ky - kn) > 1e-9
    assert len(gs.per_component) == len(_class_a_scenario().noise.spec.weights)


def test_gains_mixture_preconditions():
    with pytest.raises(ValueError):
        gn.gains_mixture(gn.Scenario(Laplace(1.0), Gaussian(1.0), Identity()))
    with pytest.raises(ValueError):
        gn.gains_mixture(gn.Scenario(Gaussian(1.0), Laplace(1.0), Identity()))


mixtures = st.lists(
    st.tuples(st.floats(0.05, 1.0), st.floats(0.01, 50.0)), min_size=1, max_size=5
).map(lambda comps: MixtureSpec(
    tuple(w / sum(c[0] for c in comps) for w, _ in comps), tuple(v for _, v in comps)
))


@settings(max_examples=30, deadline=None)
@given(source=mixtures, noise=mixtures, th=st.floats(0.1, 5.0))
def test_power_weighted_decomposition_identity_analytic(source, noise, th):
    gs = gn.gains_double_mixture(source, noise, SoftLimiter(th))
    px, pn = source.total_variance(), noise.total_variance()
    lhs = (px + pn) * gs.k_y.value
    rhs = px * gs.k_x.value + pn * gs.k_n.value
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_double_mixture_reductions():
    g = SoftLimiter(0.7)
    one = gn.gains_double_mixture(MixtureSpec((1.0,), (2.0,)), MixtureSpec((1.0,), (3.0,)), g)
    assert one.k_x.value == pytest.approx(one.k_y.value, abs=1e-12)
    assert one.k_n.value == pytest.approx(one.k_y.value, abs=1e-12)

    mix = MixtureSpec((0.9, 0.1), (0.2, 9.0))
    same = gn.gains_double_mixture(mix, mix, g)
    assert same.k_x.value == pytest.approx(same.k_n.value, abs=1e-10)

    padded = MixtureSpec((0.9, 0.0, 0.1), (0.2, 4.0, 9.0))
    other = MixtureSpec((0.5, 0.5), (1.0, 2.0))
    a = gn.gains_double_mixture(mix, other, g)
    b = gn.gains_double_mixture(padded, other, g)
    for ka, kb in zip((a.k_y, a.k_x, a.k_n), (b.k_y, b.k_x, b.k_n)):
        assert ka.value == kb.value


def test_double_mixture_matches_single_mixture_for_gaussian_source():
    sc = _class_a_scenario(-3.0)
    single = gn.gains_mixture(sc)
    double = gn.gains_double_mixture(MixtureSpec((1.0,), (1.0,)), sc.noise.spec, sc.g)
    for a, b in zip((single.k_y, single.k_x, single.k_n), (double.k_y, double.k_x, double.k_n)):
        assert a.value == pytest.approx(b.value, rel=1e-13)


def test_double_mixture_component_cap():
    big = MixtureSpec(tuple([1 / 101] * 101), tuple(np.linspace(1, 2, 101)))
    with pytest.raises(ValueError):
        gn.gains_double_mixture(big, big, Identity())


# --- scenario and power split ---------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(total=st.floats(0.1, 100.0), rho_p=st.floats(0.01, 0.99), corr=st.floats(-0.9, 0.9))
def test_split_power_reconstructs_total(total, rho_p, corr):
    px, pn = gn.split_power(total, rho_p, corr)
    assert px / (px + pn) == pytest.approx(rho_p, rel=1e-12)
    sc = gn.Scenario(Gaussian(px), Gaussian(pn), Identity(), corr)
    assert sc.p_y == pytest.approx(total, rel=1e-12)


def test_split_power_equal_case():
    px, pn = gn.split_power(10.0, 0.5, 0.3)
    assert px == pn == pytest.approx(10.0 / 2.6)


def test_scenario_validation():
    with pytest.raises(ValueError):
        gn.Scenario(Laplace(1.0), Gaussian(1.0), Identity(), 0.3)
    with pytest.raises(ValueError):
        gn.Scenario(Gaussian(1.0), Gaussian(1.0), Identity(), 1.0)


def test_correlated_sampling_has_requested_covariance():
    sc = gn.Scenario(Gaussian(2.0), Gaussian(3.0), Identity(), -0.4)
    from nltgauss.rng import make_generator

    x, n = sc.sample(make_generator(0), 10**6)
    c = np.cov(x, n)
    np.testing.assert_allclose(c, [[2.0, -0.4 * math.sqrt(6)], [-0.4 * math.sqrt(6), 3.0]], atol=0.02)


def test_analytic_dispatch():
    with pytest.raises(ValueError):
        gn.gains_analytic(gn.Scenario(Laplace(1.0), Laplace(1.0), SoftLimiter(1.0)))
    px, pn = gn.split_power(10.0, 0.5, 0.3)
    sc = gn.Scenario(Gaussian(px), Gaussian(pn), SoftLimiter(1.0), 0.3)
    gs = gn.gains_analytic(sc)
    assert gs.k_y.value == pytest.approx(math.erf(1 / math.sqrt(20)), rel=1e-12)
    assert gs.k_x.value == pytest.approx(1.3 * gs.k_y.value, rel=1e-12)
    emp = gn.gains_empirical(sc, MC)
    assert abs(emp.k_x.value - gs.k_x.value) <= 4 * emp.k_x.std_error


# --- empirical gains ----------------------------------------------------------------


def test_empirical_equal_gains_gaussian_pair():
    sc = gn.Scenario(Gaussian(3.0), Gaussian(7.0), SoftLimiter(1.0))
    gs = gn.gains_empirical(sc, MC)
    assert abs(gs.difference("y-x")) <= 4 * gs.diff_std_errors["y-x"]
    assert abs(gs.difference("y-n")) <= 4 * gs.diff_std_errors["y-n"]


def test_empirical_equal_gains_iid_laplace():
    sc = gn.Scenario(Laplace(5.0), Laplace(5.0), SoftLimiter(1.0))
    gs = gn.gains_empirical(sc, MC)
    for pair in ("y-x", "y-n", "x-n"):
        assert abs(gs.difference(pair)) <= 4 * gs.diff_std_errors[pair]


def test_empirical_correlated_ratio():
    px, pn = gn.split_power(10.0, 0.5, 0.3)
    sc = gn.Scenario(Gaussian(px), Gaussian(pn), SoftLimiter(1.0), 0.3)
    gs = gn.gains_empirical(sc, MC)
    se = math.hypot(1.3 * gs.k_y.std_error, gs.k_x.std_error)
    assert abs(1.3 * gs.k_y.value - gs.k_x.value) <= 4 * se


@pytest.mark.parametrize(
    "sc",
    [
        gn.Scenario(Gaussian(3.0), Laplace(7.0), SoftLimiter(1.0)),
        gn.Scenario(Laplace(2.0), Laplace(8.0), Blanker(2.0)),
        _class_a_scenario(0.0),
    ],
    ids=["gauss-laplace", "laplace-laplace-blanker", "class-a"],
)
def test_empirical_decomposition_and_residual_identities(sc):
    gs = gn.gains_empirical(sc, MC)
    lhs = sc.p_y * gs.k_y.value
    rhs = sc.p_x * gs.k_x.value + sc.p_n * gs.k_n.value
    se = math.sqrt((sc.p_y * gs.k_y.std_error) ** 2 + (sc.p_x * gs.k_x.std_error) ** 2 + (sc.p_n * gs.k_n.std_error) ** 2)
    assert abs(lhs - rhs) <= 5 * se
    wx, wn = gs.residual_x, gs.residual_n
    assert abs(wx.value - (gs.k_x.value - gs.k_y.value) * sc.p_x) <= 5 * gs.residual_identity_se
    assert abs(wx.value + wn.value) <= 5 * math.hypot(wx.std_error, wn.std_error) + 1e-12


def test_mixture_shortcut_agrees_with_monte_carlo():
    for A in (0.01, 0.3):
        sc = _class_a_scenario(0.0, A=A, gamma=0.05)
        a = gn.gains_mixture(sc)
        e = gn.gains_empirical(sc, MC)
        for k in ("y", "x", "n"):
            ka, ke = getattr(a, f"k_{k}"), getattr(e, f"k_{k}")
            assert abs(ka.value - ke.value) <= 5 * ke.std_error


def test_empirical_is_deterministic():
    sc = gn.Scenario(Laplace(1.0), Gaussian(1.0), SoftLimiter(0.5))
    a = gn.gains_empirical(sc, McSettings(50_000, seed=4))
    b = gn.gains_empirical(sc, McSettings(50_000, seed=4, workers=3))
    assert a == b
