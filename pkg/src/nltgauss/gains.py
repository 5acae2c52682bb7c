"""Linear-regression gains of ``Z = g(X + N)``.

``k_y = E{ZY}/E{Y^2}``, ``k_x = E{ZX}/E{X^2}``, ``k_n = E{ZN}/E{N^2}``.

Analytic routes only ever need single-fold Gaussian integrals: for every
Gaussian component pair the three gains coincide, so mixture gains are
weighted sums of per-component ``k_y``. The empirical route estimates the
same ratios from seeded samples and is the brute-force oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Gaussian, Mixture, MixtureSpec, ScalarDistribution, as_mixture
from .expectations import (
    Estimate,
    McSettings,
    QuadratureSettings,
    batch_means,
    batch_std_error,
    gaussian_expect,
    pooled,
)
from .nonlinearities import JumpDiscontinuityError, Nonlinearity

MAX_COMPONENT_PAIRS = 10_000


@dataclass(frozen=True)
class Scenario:
    """``Z = g(X + N)`` with zero-mean source ``X`` and noise ``N``.

    ``correlation`` is the coefficient rho_XN; it may be nonzero only when
    both marginals are Gaussian.
    """

    source: ScalarDistribution
    noise: ScalarDistribution
    g: Nonlinearity
    correlation: float = 0.0

    def __post_init__(self):
        if not -1.0 < self.correlation < 1.0:
            raise ValueError("correlation must lie in (-1, 1)")
        if self.correlation != 0.0 and not (
            isinstance(self.source, Gaussian) and isinstance(self.noise, Gaussian)
        ):
            raise ValueError("correlated inputs are supported only for two Gaussians")
        if not self.p_y > 0:
            raise ValueError("P_Y must be > 0")

    @property
    def p_x(self) -> float:
        return self.source.variance

    @property
    def p_n(self) -> float:
        return self.noise.variance

    @property
    def e_xn(self) -> float:
        return self.correlation * math.sqrt(self.p_x * self.p_n)

    @property
    def p_y(self) -> float:
        return self.p_x + self.p_n + 2.0 * self.e_xn

    def with_g(self, g: Nonlinearity) -> "Scenario":
        return Scenario(self.source, self.noise, g, self.correlation)

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``(x, noise)``; correlated Gaussians via the 2x2 Cholesky factor."""
        if self.correlation == 0.0:
            return self.source.sample(rng, n), self.noise.sample(rng, n)
        z1 = rng.standard_normal(n)
        z2 = rng.standard_normal(n)
        r = self.correlation
        x = math.sqrt(self.p_x) * z1
        nn = math.sqrt(self.p_n) * (r * z1 + math.sqrt(1.0 - r * r) * z2)
        return x, nn


def split_power(total_power: float, rho_p: float, correlation: float = 0.0) -> tuple[float, float]:
    """``(P_X, P_N)`` with ``P_X / (P_X + P_N) = rho_p`` and total input power
    ``P_X + P_N + 2 rho_XN sqrt(P_X P_N) = total_power``."""
    if not 0.0 < rho_p < 1.0:
        raise ValueError("rho_p must lie in (0, 1)")
    s = total_power / (1.0 + 2.0 * correlation * math.sqrt(rho_p * (1.0 - rho_p)))
    return rho_p * s, (1.0 - rho_p) * s


@dataclass(frozen=True)
class GainSet:
    k_y: Estimate
    k_x: Estimate
    k_n: Estimate
    output_power: Estimate
    method: str = "analytic"
    # per-component k_y^(l) (or k^(l,j) for two mixtures, row-major in (l, j))
    per_component: tuple[float, ...] | None = None
    # batch-means standard errors of pairwise differences: keys "y-x", "y-n", "x-n"
    diff_std_errors: dict = field(default_factory=dict)
    # sample E{W_y X}, E{W_y N} with W_y = Z - k_y Y
    residual_x: Estimate | None = None
    residual_n: Estimate | None = None
    # batch SE of E{W_y X} - (k_x - k_y) P_X
    residual_identity_se: float | None = None

    def difference(self, pair: str) -> float:
        a, b = pair.split("-")
        return getattr(self, f"k_{a}").value - getattr(self, f"k_{b}").value


def gain_gaussian(g: Nonlinearity, variance: float, settings: QuadratureSettings = QuadratureSettings()) -> Estimate:
    """``k_y`` for ``Y ~ G(0, variance)``."""
    e = gaussian_expect(lambda y: g(y) * y, variance, g.breakpoints, settings)
    return Estimate(e.value / variance, 0.0)


def _power_gaussian(g, variance, settings):
    return gaussian_expect(lambda y: g(y) ** 2, variance, g.breakpoints, settings).value


def gains_mixture(scenario: Scenario, settings: QuadratureSettings = QuadratureSettings()) -> GainSet:
    """Gains for Gaussian ``X`` and Gaussian-mixture (or Gaussian) ``N``.

    With ``s_l = sigma_X^2 + sigma_{N,l}^2`` and per-component
    ``k_l = E{g(Y_l) Y_l} / s_l``::

        k_x = sum beta_l k_l
        k_n = sum (sigma_{N,l}^2 / sigma_N^2) beta_l k_l
        k_y = sum (s_l / sigma_Y^2) beta_l k_l
    """
    if not isinstance(scenario.source, Gaussian):
        raise ValueError("gains_mixture needs a Gaussian source")
    mix = as_mixture(scenario.noise)
    if mix is None:
        raise ValueError("gains_mixture needs Gaussian or Gaussian-mixture noise")
    if scenario.correlation != 0.0:
        raise ValueError("gains_mixture needs independent inputs")
    g = scenario.g
    sx2 = scenario.p_x
    sn2 = mix.total_variance()
    sy2 = sx2 + sn2
    k_l, kx, kn, ky, eg2 = [], [], [], [], []
    for b, v in zip(mix.weights, mix.variances):
        if b == 0:
            k_l.append(float("nan"))
            continue
        s = sx2 + v
        k = gain_gaussian(g, s, settings).value
        k_l.append(k)
        kx.append(b * k)
        kn.append(v / sn2 * b * k)
        ky.append(s / sy2 * b * k)
        eg2.append(b * _power_gaussian(g, s, settings))
    return GainSet(
        k_y=Estimate(math.fsum(ky)),
        k_x=Estimate(math.fsum(kx)),
        k_n=Estimate(math.fsum(kn)),
        output_power=Estimate(math.fsum(eg2)),
        method="analytic",
        per_component=tuple(k_l),
    )


def gains_double_mixture(
    source: MixtureSpec,
    noise: MixtureSpec,
    g: Nonlinearity,
    settings: QuadratureSettings = QuadratureSettings(),
) -> GainSet:
    """Gains when both inputs are independent zero-mean Gaussian mixtures."""
    source = source.drop_zero_weights()
    noise = noise.drop_zero_weights()
    if source.n_components * noise.n_components > MAX_COMPONENT_PAIRS:
        raise ValueError(
            f"{source.n_components}x{noise.n_components} component pairs exceed {MAX_COMPONENT_PAIRS}"
        )
    sx2 = source.total_variance()
    sn2 = noise.total_variance()
    sy2 = sx2 + sn2
    k_lj, ky, kx, kn, eg2 = [], [], [], [], []
    for bl, vl in zip(source.weights, source.variances):
        for bj, vj in zip(noise.weights, noise.variances):
            s = vl + vj
            k = gain_gaussian(g, s, settings).value
            w = bl * bj
            k_lj.append(k)
            ky.append(w * s / sy2 * k)
            kx.append(w * vl / sx2 * k)
            kn.append(w * vj / sn2 * k)
            eg2.append(w * _power_gaussian(g, s, settings))
    return GainSet(
        k_y=Estimate(math.fsum(ky)),
        k_x=Estimate(math.fsum(kx)),
        k_n=Estimate(math.fsum(kn)),
        output_power=Estimate(math.fsum(eg2)),
        method="analytic",
        per_component=tuple(k_lj),
    )


def gains_correlated_gaussian(scenario: Scenario, settings: QuadratureSettings = QuadratureSettings()) -> GainSet:
    """Jointly Gaussian, possibly correlated inputs.

    Bussgang: ``E{X g(Y)} = k_y E{XY}``, hence
    ``k_x = k_y (P_X + E{XN}) / P_X`` and likewise for ``k_n``.
    """
    if not (isinstance(scenario.source, Gaussian) and isinstance(scenario.noise, Gaussian)):
        raise ValueError("needs two Gaussian inputs")
    ky = gain_gaussian(scenario.g, scenario.p_y, settings).value
    c = scenario.e_xn
    return GainSet(
        k_y=Estimate(ky),
        k_x=Estimate(ky * (scenario.p_x + c) / scenario.p_x),
        k_n=Estimate(ky * (scenario.p_n + c) / scenario.p_n),
        output_power=Estimate(_power_gaussian(scenario.g, scenario.p_y, settings)),
        method="analytic",
    )


def gains_analytic(scenario: Scenario, settings: QuadratureSettings = QuadratureSettings()) -> GainSet:
    """Dispatch to the single-fold route that fits the scenario.

    Raises ``ValueError`` when neither input combination admits one (e.g.
    Laplace or uniform marginals); use :func:`gains_empirical` there.
    """
    if scenario.correlation != 0.0:
        return gains_correlated_gaussian(scenario, settings)
    if isinstance(scenario.source, Gaussian) and as_mixture(scenario.noise) is not None:
        return gains_mixture(scenario, settings)
    sx, sn = as_mixture(scenario.source), as_mixture(scenario.noise)
    if sx is not None and sn is not None:
        return gains_double_mixture(sx, sn, scenario.g, settings)
    raise ValueError(
        f"no single-fold route for {scenario.source.kind} + {scenario.noise.kind}; use gains_empirical"
    )


def _moments(g):
    def stats(x, nn):
        y = x + nn
        z = g(y)
        return [z * y, y * y, z * x, x * x, z * nn, nn * nn, z * z, x * nn]

    return stats


def gains_empirical(scenario: Scenario, mc: McSettings = McSettings()) -> GainSet:
    """Brute-force sample-moment gains with batch-means standard errors.

    Each gain is the ratio of pooled sample means (sample second moment in
    the denominator); its standard error is the spread of the per-batch
    ratios divided by ``sqrt(n_batches)``.
    """
    means, sizes = batch_means(_moments(scenario.g), scenario.sample, mc)
    m = pooled(means, sizes)
    zy, yy, zx, xx, zn, nn, zz, xn = range(8)
    ky_b = means[:, zy] / means[:, yy]
    kx_b = means[:, zx] / means[:, xx]
    kn_b = means[:, zn] / means[:, nn]
    ky = m[zy] / m[yy]
    kx = m[zx] / m[xx]
    kn = m[zn] / m[nn]

    wx_b = means[:, zx] - ky_b * (means[:, xx] + means[:, xn])
    wn_b = means[:, zn] - ky_b * (means[:, nn] + means[:, xn])
    wx = m[zx] - ky * (m[xx] + m[xn])
    wn = m[zn] - ky * (m[nn] + m[xn])
    identity_b = wx_b - (kx_b - ky_b) * scenario.p_x

    return GainSet(
        k_y=Estimate(float(ky), batch_std_error(ky_b)),
        k_x=Estimate(float(kx), batch_std_error(kx_b)),
        k_n=Estimate(float(kn), batch_std_error(kn_b)),
        output_power=Estimate(float(m[zz]), batch_std_error(means[:, zz])),
        method="empirical",
        diff_std_errors={
            "y-x": batch_std_error(ky_b - kx_b),
            "y-n": batch_std_error(ky_b - kn_b),
            "x-n": batch_std_error(kx_b - kn_b),
        },
        residual_x=Estimate(float(wx), batch_std_error(wx_b)),
        residual_n=Estimate(float(wn), batch_std_error(wn_b)),
        residual_identity_se=batch_std_error(identity_b),
    )


def gain_scarano_crosscheck(
    g: Nonlinearity, variance: float, settings: QuadratureSettings = QuadratureSettings()
) -> Estimate:
    """``k_y`` through ``E{g'(Y)}`` (Gaussian ``Y``), integrated panel-wise
    between breakpoints. Refuses nonlinearities with jumps."""
    if getattr(g, "has_jumps", False):
        raise JumpDiscontinuityError(f"{g.kind} has jump discontinuities")
    return gaussian_expect(g.derivative, variance, g.breakpoints, settings)


def scenario_from_mixtures(source: MixtureSpec, noise: MixtureSpec, g: Nonlinearity) -> Scenario:
    return Scenario(Mixture(source), Mixture(noise), g)
