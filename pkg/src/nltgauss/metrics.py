"""Output SNR, MSE, capacity lower bounds and histogram mutual information.

Capacities are computed in nats; :meth:`MetricSet.to_bits` converts.
``None`` marks an undefined-degenerate value (e.g. ``k_x`` numerically zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .distributions import Gaussian, Mixture, MixtureSpec
from .expectations import McSettings, QuadratureSettings
from .gains import GainSet, Scenario, gains_mixture
from .rng import substream

LN2 = math.log(2.0)
DEGENERATE_GAIN_RATIO = 1e-9


@dataclass(frozen=True)
class MetricSet:
    e_g2: float
    snr_x: float | None
    snr_y: float | None
    mse: float
    mse_u: float | None
    residual_power_wx: float
    c_snr_x: float | None
    c_snr_y: float | None
    c_mse: float | None
    c_awgn: float
    unit: str = "nat"

    def to_bits(self) -> "MetricSet":
        if self.unit == "bit":
            return self

        def conv(v):
            return None if v is None else v / LN2

        return replace(
            self,
            c_snr_x=conv(self.c_snr_x),
            c_snr_y=conv(self.c_snr_y),
            c_mse=conv(self.c_mse),
            c_awgn=conv(self.c_awgn),
            unit="bit",
        )


def _snr(k: float, e_g2: float, sx2: float) -> float | None:
    """``k^2 sx2 / (E{g^2} - k^2 sx2)``; ``None`` when ``k`` is degenerate or
    the residual power is not positive."""
    if abs(k) <= DEGENERATE_GAIN_RATIO * math.sqrt(e_g2 / sx2):
        return None
    useful = k * k * sx2
    residual = e_g2 - useful
    if not residual > 0:
        return None
    return useful / residual


def _half_log1p(v):
    return None if v is None else 0.5 * math.log1p(v)


def metric_set(scenario: Scenario, gains: GainSet) -> MetricSet:
    sx2, sn2 = scenario.p_x, scenario.p_n
    if not sx2 > 0:
        raise ValueError("source power must be > 0")
    e_g2 = float(gains.output_power.value)
    kx = float(gains.k_x.value)
    ky = float(gains.k_y.value)

    snr_x = _snr(kx, e_g2, sx2)
    snr_y = _snr(ky, e_g2, sx2)
    mse = e_g2 + (1.0 - 2.0 * kx) * sx2
    kx_degenerate = abs(kx) <= DEGENERATE_GAIN_RATIO * math.sqrt(e_g2 / sx2)
    mse_u = None if kx_degenerate else e_g2 / (kx * kx) - sx2
    return MetricSet(
        e_g2=e_g2,
        snr_x=snr_x,
        snr_y=snr_y,
        mse=mse,
        mse_u=mse_u,
        residual_power_wx=e_g2 - kx * kx * sx2,
        c_snr_x=_half_log1p(snr_x),
        c_snr_y=_half_log1p(snr_y),
        c_mse=0.5 * math.log(sx2 / mse) if mse > 0 else None,
        c_awgn=0.5 * math.log1p(sx2 / sn2),
    )


def mse_for_gaussian_source(
    g, source_variance: float, noise: MixtureSpec, settings: QuadratureSettings = QuadratureSettings()
) -> float:
    """``E{(g(Y) - X)^2}`` for ``X ~ G(0, source_variance)`` in mixture noise."""
    scenario = Scenario(Gaussian(source_variance), Mixture(noise), g)
    gs = gains_mixture(scenario, settings)
    return gs.output_power.value + (1.0 - 2.0 * gs.k_x.value) * source_variance


def snr_link_residual(m: MetricSet, k_x: float, source_variance: float) -> float | None:
    """Relative error of ``SNR_x (MSE - (1 - k_x)^2 sx2) = k_x^2 sx2``."""
    if m.snr_x is None:
        return None
    lhs = m.snr_x * (m.mse - (1.0 - k_x) ** 2 * source_variance)
    rhs = k_x * k_x * source_variance
    return abs(lhs - rhs) / abs(rhs)


@dataclass(frozen=True)
class LinearEstimates:
    """Coefficients of the best linear estimators ``c * Z`` of X, N and Y."""

    x: float | None
    n: float | None
    y: float | None


def linear_estimates_from_output(scenario: Scenario, gains: GainSet) -> LinearEstimates:
    sz2 = gains.output_power.value
    if not sz2 > 0:
        return LinearEstimates(None, None, None)
    cx = gains.k_x.value * scenario.p_x / sz2
    cn = gains.k_n.value * scenario.p_n / sz2
    cy = gains.k_y.value * scenario.p_y / sz2
    return LinearEstimates(cx, cn, cy)


@dataclass(frozen=True)
class MiEstimate:
    """Histogram mutual information in nats.

    ``value`` is the plug-in estimate; ``bias_term`` is the Miller-Madow
    first-order bias ``(K_xy - K_x - K_y + 1) / (2 n)`` computed from the
    occupied-cell counts, so ``corrected = value - bias_term``.
    """

    value: float
    n_samples: int
    bins_per_axis: int
    range_multiple: float
    bias_term: float = 0.0
    clipped_fraction: float = 0.0

    @property
    def corrected(self) -> float:
        return self.value - self.bias_term


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def _bin_index(v: np.ndarray, half_range: float, bins: int) -> tuple[np.ndarray, int]:
    # samples outside the range are clipped into the edge bins
    scaled = (v + half_range) * (bins / (2.0 * half_range))
    idx = np.floor(scaled).astype(np.int64)
    outside = int(np.count_nonzero((idx < 0) | (idx >= bins)))
    return np.clip(idx, 0, bins - 1), outside


def _mi_from_counts(joint: np.ndarray, n: int) -> tuple[float, float]:
    cx = joint.sum(axis=1)
    cy = joint.sum(axis=0)
    mi = _entropy(cx, n) + _entropy(cy, n) - _entropy(joint.ravel(), n)
    k_xy = int(np.count_nonzero(joint))
    bias = (k_xy - int(np.count_nonzero(cx)) - int(np.count_nonzero(cy)) + 1) / (2.0 * n)
    return mi, bias


def mutual_information_histogram(
    scenario: Scenario,
    bins: int = 512,
    range_multiple: float = 8.0,
    mc: McSettings = McSettings(n_samples=10**7),
    target: str = "y",
) -> MiEstimate:
    """Plug-in MI of ``(X, Y)`` (``target='y'``) or ``(X, g(Y))`` (``'z'``).

    Axes span ``+/- range_multiple`` times each variable's RMS: model powers
    for ``X`` and ``Y``, the first batch's sample RMS for ``Z``.
    """
    if mc.n_samples < 10**5:
        raise ValueError("histogram MI needs n_samples >= 1e5")
    if target not in ("y", "z"):
        raise ValueError("target must be 'y' or 'z'")
    sizes = mc.batch_sizes()
    half_x = range_multiple * math.sqrt(scenario.p_x)
    half_t = None if target == "z" else range_multiple * math.sqrt(scenario.p_y)
    joint = np.zeros(bins * bins, dtype=np.int64)
    outside = 0
    for b in range(mc.n_batches):
        x, nn = scenario.sample(substream(mc.seed, b), int(sizes[b]))
        t = x + nn
        if target == "z":
            t = scenario.g(t)
            if half_t is None:
                rms = math.sqrt(float(np.mean(t * t)))
                half_t = range_multiple * (rms if rms > 0 else 1.0)
        ix, ox = _bin_index(x, half_x, bins)
        it, ot = _bin_index(t, half_t, bins)
        outside += max(ox, ot)
        cell = np.bincount(ix * bins + it, minlength=bins * bins)
        joint += cell
    n = int(sizes.sum())
    mi, bias = _mi_from_counts(joint.reshape(bins, bins), n)
    return MiEstimate(
        value=mi,
        n_samples=n,
        bins_per_axis=bins,
        range_multiple=range_multiple,
        bias_term=bias,
        clipped_fraction=outside / n,
    )
