"""Zero-mean scalar distributions: Gaussian, Gaussian mixtures (incl. Middleton
Class-A), Laplace, uniform and triangular.

Every distribution is parameterized by its variance and exposes ``pdf``,
``sample`` and ``char_function``. Characteristic functions use the
ordinary-frequency convention ``C(u) = E{exp(j 2 pi X u)}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from scipy.special import gammaln

from .rng import make_generator

SQRT2PI = math.sqrt(2.0 * math.pi)

#: Hard cap on the number of Class-A components retained by truncation.
MAX_CLASS_A_COMPONENTS = 10_000


class ClassATruncationError(ValueError):
    """The Poisson mass tolerance could not be met within the component cap."""


@dataclass(frozen=True)
class MixtureSpec:
    """Zero-mean Gaussian mixture ``sum_l beta_l G(.; var_l)``."""

    weights: tuple[float, ...]
    variances: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        s = tuple(float(v) for v in self.variances)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "variances", s)
        if len(w) == 0 or len(w) != len(s):
            raise ValueError("weights and variances must be non-empty and equal length")
        if any(b < 0 or not math.isfinite(b) for b in w):
            raise ValueError("mixture weights must be finite and >= 0")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {math.fsum(w)!r}, not 1")
        if any(not (v > 0 and math.isfinite(v)) for v in s):
            raise ValueError("mixture variances must be finite and > 0")

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def total_variance(self) -> float:
        return math.fsum(b * v for b, v in zip(self.weights, self.variances))

    def kurtosis(self) -> float:
        """Pearson kurtosis ``3 sum(b v^2) / (sum(b v))^2``."""
        m4 = math.fsum(b * v * v for b, v in zip(self.weights, self.variances))
        return 3.0 * m4 / self.total_variance() ** 2

    def scaled(self, factor: float) -> "MixtureSpec":
        return MixtureSpec(self.weights, tuple(v * factor for v in self.variances))

    def convolve_gaussian(self, variance: float) -> "MixtureSpec":
        """Law of ``N + X`` with ``X ~ G(0, variance)`` independent of ``N``."""
        return MixtureSpec(self.weights, tuple(v + variance for v in self.variances))

    def drop_zero_weights(self) -> "MixtureSpec":
        keep = [(b, v) for b, v in zip(self.weights, self.variances) if b > 0]
        return MixtureSpec(tuple(b for b, _ in keep), tuple(v for _, v in keep))


@dataclass(frozen=True)
class ClassAParams:
    """Middleton Class-A canonical parameters.

    ``A`` is the impulsive index, ``Gamma`` the ratio between the Gaussian
    background power and the impulsive power, ``total_variance`` the overall
    noise power.
    """

    A: float
    Gamma: float
    total_variance: float = 1.0
    mass_tolerance: float = 1e-12

    def __post_init__(self):
        if not (self.A > 0 and self.Gamma > 0 and self.total_variance > 0):
            raise ValueError("Class-A parameters A, Gamma and total_variance must be > 0")
        if not (0 < self.mass_tolerance < 1):
            raise ValueError("mass_tolerance must lie in (0, 1)")


def class_a_raw_weights(A: float, n: int) -> np.ndarray:
    """Poisson masses ``exp(-A) A^l / l!`` for ``l = 0..n-1`` (no truncation)."""
    ell = np.arange(n, dtype=float)
    return np.exp(-A + ell * math.log(A) - gammaln(ell + 1.0))


def class_a_mixture(params: ClassAParams) -> MixtureSpec:
    """Truncate and renormalize the infinite Class-A mixture.

    Components are added until the cumulative Poisson mass reaches
    ``1 - mass_tolerance``. Weights are then renormalized to unit sum and the
    variances rescaled by a factor ``1 + O(mass_tolerance)`` so that the total
    variance equals ``params.total_variance``.
    """
    A, G, var = params.A, params.Gamma, params.total_variance
    # Mode of Poisson(A) plus a generous tail: enough to reach any tolerance >= 1e-300.
    n_max = min(MAX_CLASS_A_COMPONENTS, int(A + 40.0 * math.sqrt(A) + 60))
    raw = class_a_raw_weights(A, n_max)
    cum = np.cumsum(raw)
    reached = np.nonzero(cum >= 1.0 - params.mass_tolerance)[0]
    if reached.size == 0:
        raise ClassATruncationError(
            f"Class-A mass {cum[-1]!r} < 1 - {params.mass_tolerance} "
            f"within {n_max} components (A={A})"
        )
    n = int(reached[0]) + 1
    w = raw[:n] / cum[n - 1]
    ell = np.arange(n, dtype=float)
    v = (ell / A + G) / (1.0 + G) * var
    v *= var / float(np.dot(w, v))
    return MixtureSpec(tuple(w.tolist()), tuple(v.tolist()))


def _gauss_pdf(x, var):
    return np.exp(-0.5 * x * x / var) / (SQRT2PI * math.sqrt(var))


@dataclass(frozen=True)
class Gaussian:
    variance: float
    kind = "gaussian"

    def __post_init__(self):
        _check_variance(self.variance)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def pdf(self, x):
        return _gauss_pdf(np.asarray(x, dtype=float), self.variance)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal(n) * math.sqrt(self.variance)

    def char_function(self, u):
        u = np.asarray(u, dtype=float)
        return np.exp(-2.0 * (math.pi * u) ** 2 * self.variance).astype(complex)

    def with_variance(self, variance: float) -> "Gaussian":
        return Gaussian(variance)

    def to_config(self) -> dict:
        return {"kind": self.kind, "variance": self.variance}


@dataclass(frozen=True)
class Laplace:
    """Laplace law ``exp(-sqrt(2)|x|/sigma) / (sqrt(2) sigma)``, variance sigma^2."""

    variance: float
    kind = "laplace"

    def __post_init__(self):
        _check_variance(self.variance)

    @property
    def scale(self) -> float:
        return math.sqrt(self.variance / 2.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (0.0,)

    def pdf(self, x):
        b = self.scale
        return np.exp(-np.abs(np.asarray(x, dtype=float)) / b) / (2.0 * b)

    def sample(self, rng, n):
        return rng.laplace(0.0, self.scale, n)

    def char_function(self, u):
        u = np.asarray(u, dtype=float)
        return (1.0 / (1.0 + (2.0 * math.pi * self.scale * u) ** 2)).astype(complex)

    def with_variance(self, variance):
        return Laplace(variance)

    def to_config(self):
        return {"kind": self.kind, "variance": self.variance}


@dataclass(frozen=True)
class Uniform:
    """Uniform on ``[-sqrt(3) sigma, sqrt(3) sigma]``."""

    variance: float
    kind = "uniform"

    def __post_init__(self):
        _check_variance(self.variance)

    @property
    def half_width(self) -> float:
        return math.sqrt(3.0 * self.variance)

    @property
    def breakpoints(self):
        a = self.half_width
        return (-a, a)

    def pdf(self, x):
        a = self.half_width
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= a, 0.5 / a, 0.0)

    def sample(self, rng, n):
        a = self.half_width
        return rng.uniform(-a, a, n)

    def char_function(self, u):
        # np.sinc(t) = sin(pi t) / (pi t)
        u = np.asarray(u, dtype=float)
        return np.sinc(2.0 * self.half_width * u).astype(complex)

    def with_variance(self, variance):
        return Uniform(variance)

    def to_config(self):
        return {"kind": self.kind, "variance": self.variance}


@dataclass(frozen=True)
class Triangular:
    """Self-convolution of ``Uniform(variance / 2)``; support ``|x| <= sqrt(6) sigma``."""

    variance: float
    kind = "triangular"

    def __post_init__(self):
        _check_variance(self.variance)

    @property
    def half_width(self) -> float:
        return math.sqrt(6.0 * self.variance)

    @property
    def breakpoints(self):
        c = self.half_width
        return (-c, 0.0, c)

    def pdf(self, x):
        c = self.half_width
        x = np.asarray(x, dtype=float)
        return np.maximum(c - np.abs(x), 0.0) / (c * c)

    def sample(self, rng, n):
        part = Uniform(self.variance / 2.0)
        return part.sample(rng, n) + part.sample(rng, n)

    def char_function(self, u):
        return Uniform(self.variance / 2.0).char_function(u) ** 2

    def with_variance(self, variance):
        return Triangular(variance)

    def to_config(self):
        return {"kind": self.kind, "variance": self.variance}


@dataclass(frozen=True)
class Mixture:
    """Zero-mean Gaussian mixture; ``class_a`` records Class-A provenance."""

    spec: MixtureSpec
    class_a: ClassAParams | None = field(default=None, compare=False)
    kind = "mixture"

    @classmethod
    def from_class_a(cls, params: ClassAParams) -> "Mixture":
        return cls(class_a_mixture(params), params)

    @property
    def variance(self) -> float:
        return self.spec.total_variance()

    @property
    def breakpoints(self):
        return ()

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for b, v in zip(self.spec.weights, self.spec.variances):
            out = out + b * _gauss_pdf(x, v)
        return out

    def sample(self, rng, n):
        w = np.asarray(self.spec.weights)
        sd = np.sqrt(np.asarray(self.spec.variances))
        idx = rng.choice(w.size, size=n, p=w)
        return rng.standard_normal(n) * sd[idx]

    def char_function(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape, dtype=complex)
        for b, v in zip(self.spec.weights, self.spec.variances):
            out += b * np.exp(-2.0 * (math.pi * u) ** 2 * v)
        return out

    def with_variance(self, variance):
        if self.class_a is not None:
            p = self.class_a
            return Mixture.from_class_a(ClassAParams(p.A, p.Gamma, variance, p.mass_tolerance))
        return Mixture(self.spec.scaled(variance / self.variance))

    def to_config(self):
        if self.class_a is not None:
            p = self.class_a
            cfg = {"kind": "class_a", "A": p.A, "gamma": p.Gamma, "variance": p.total_variance}
            if p.mass_tolerance != 1e-12:
                cfg["mass_tolerance"] = p.mass_tolerance
            return cfg
        return {
            "kind": "mixture",
            "weights": list(self.spec.weights),
            "variances": list(self.spec.variances),
        }


ScalarDistribution = Union[Gaussian, Laplace, Uniform, Triangular, Mixture]


def _check_variance(v):
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"variance must be finite and > 0, got {v!r}")


def as_mixture(dist: ScalarDistribution) -> MixtureSpec | None:
    """Mixture view of Gaussian/mixture laws; ``None`` for everything else."""
    if isinstance(dist, Gaussian):
        return MixtureSpec((1.0,), (dist.variance,))
    if isinstance(dist, Mixture):
        return dist.spec
    return None


def pdf(dist: ScalarDistribution, x):
    return dist.pdf(x)


def sample(dist: ScalarDistribution, n: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """Draw ``n`` samples; an integer seed maps to a Philox stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_generator(seed)
    return dist.sample(rng, n)


def char_function(dist: ScalarDistribution, u_grid) -> np.ndarray:
    return dist.char_function(u_grid)


_SIMPLE = {"gaussian": Gaussian, "laplace": Laplace, "uniform": Uniform, "triangular": Triangular}


def from_config(cfg: dict[str, Any], variance: float | None = None) -> ScalarDistribution:
    """Build a distribution from a config fragment.

    ``variance`` overrides (or supplies) the power, which is how sweeps set
    ``P_X`` and ``P_N`` without editing the fragment.
    """
    if "kind" not in cfg:
        raise ValueError(f"distribution fragment {cfg!r} has no 'kind'")
    kind = str(cfg["kind"]).lower()
    var = variance if variance is not None else cfg.get("variance", 1.0)
    if kind in _SIMPLE:
        return _SIMPLE[kind](float(var))
    if kind == "class_a":
        params = ClassAParams(
            float(cfg["A"]),
            float(cfg["gamma"]),
            float(var),
            float(cfg.get("mass_tolerance", 1e-12)),
        )
        return Mixture.from_class_a(params)
    if kind == "mixture":
        w = np.asarray(cfg["weights"], dtype=float)
        s = np.asarray(cfg["variances"], dtype=float)
        mix = Mixture(MixtureSpec(tuple((w / w.sum()).tolist()), tuple(s.tolist())))
        return mix.with_variance(float(variance)) if variance is not None else mix
    raise ValueError(f"unknown distribution kind {kind!r}")


def to_config(dist: ScalarDistribution) -> dict[str, Any]:
    return dist.to_config()
