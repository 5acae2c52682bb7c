"""Memoryless nonlinearities ``g(y)``.

All catalog members are vectorized callables with a ``breakpoints`` tuple
(abscissae where ``g`` or ``g'`` is discontinuous) used to split quadrature
panels, and a ``derivative`` where the almost-everywhere derivative exists
without distributional terms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable, Union

import numpy as np

from .distributions import MixtureSpec


class TabulationRangeWarning(UserWarning):
    """A tabulated nonlinearity was evaluated outside its breakpoint hull."""


class JumpDiscontinuityError(ValueError):
    """The requested operation needs ``g`` without jump discontinuities."""


@dataclass(frozen=True)
class Identity:
    kind = "identity"
    breakpoints = ()
    has_jumps = False

    def __call__(self, y):
        return np.asarray(y, dtype=float)

    def derivative(self, y):
        return np.ones_like(np.asarray(y, dtype=float))

    def to_config(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Scale:
    a: float
    kind = "scale"
    breakpoints = ()
    has_jumps = False

    def __call__(self, y):
        return self.a * np.asarray(y, dtype=float)

    def derivative(self, y):
        return np.full_like(np.asarray(y, dtype=float), self.a)

    def to_config(self):
        return {"kind": self.kind, "a": self.a}


@dataclass(frozen=True)
class SoftLimiter:
    """``y`` for ``|y| < y_th``, ``y_th sign(y)`` otherwise."""

    y_th: float
    kind = "soft_limiter"
    has_jumps = False

    def __post_init__(self):
        if not self.y_th > 0:
            raise ValueError("y_th must be > 0")

    @property
    def breakpoints(self):
        return (-self.y_th, self.y_th)

    def __call__(self, y):
        return np.clip(np.asarray(y, dtype=float), -self.y_th, self.y_th)

    def derivative(self, y):
        return (np.abs(np.asarray(y, dtype=float)) < self.y_th).astype(float)

    def to_config(self):
        return {"kind": self.kind, "y_th": self.y_th}


@dataclass(frozen=True)
class Blanker:
    """``y`` for ``|y| < y_th``, exactly zero otherwise."""

    y_th: float
    kind = "blanker"
    has_jumps = True

    def __post_init__(self):
        if not self.y_th > 0:
            raise ValueError("y_th must be > 0")

    @property
    def breakpoints(self):
        return (-self.y_th, self.y_th)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) < self.y_th, y, 0.0)

    def derivative(self, y):
        raise JumpDiscontinuityError("blanker has jumps at +/- y_th; E{g'} needs delta terms")

    def to_config(self):
        return {"kind": self.kind, "y_th": self.y_th}


@dataclass(frozen=True)
class MixtureMmse:
    """Conditional-mean estimator of ``X ~ G(0, source_variance)`` from
    ``Y = X + N`` with ``N`` a zero-mean Gaussian mixture.

    ``g(y) = y * sum_m w_m(y) c_m`` with ``c_m = sx2 / (sx2 + s_m)`` and
    posterior component weights ``w_m(y) ∝ beta_m G(y; sx2 + s_m)``,
    normalized in the log domain.
    """

    source_variance: float
    noise: MixtureSpec
    kind = "mixture_mmse"
    breakpoints = ()
    has_jumps = False

    def __post_init__(self):
        if not self.source_variance > 0:
            raise ValueError("source_variance must be > 0")
        object.__setattr__(self, "noise", self.noise.drop_zero_weights())

    @property
    def _terms(self):
        s = self.source_variance + np.asarray(self.noise.variances)
        logb = np.log(np.asarray(self.noise.weights))
        return s, logb, self.source_variance / s

    def _posterior(self, y: np.ndarray) -> np.ndarray:
        s, logb, _ = self._terms
        with np.errstate(over="ignore", invalid="ignore"):
            logw = logb - 0.5 * np.log(s) - 0.5 * (y[:, None] ** 2) / s
            top = np.max(logw, axis=1, keepdims=True)
            w = np.exp(logw - top)
            w /= np.sum(w, axis=1, keepdims=True)
        bad = ~np.all(np.isfinite(w), axis=1)
        if np.any(bad):
            # |y| so large that y^2 overflows: the widest component dominates.
            tail = np.zeros(s.size)
            tail[int(np.argmax(s))] = 1.0
            w[bad] = tail
        return w

    def gain_factor(self, y):
        """``g(y) / y``; lies between the smallest and largest ``c_m``."""
        y = np.asarray(y, dtype=float)
        _, _, c = self._terms
        return self._posterior(np.atleast_1d(y).ravel()).dot(c).reshape(y.shape)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.atleast_1d(y).ravel() * self.gain_factor(y).ravel()
        return out.reshape(y.shape)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        s, _, c = self._terms
        w = self._posterior(flat)
        h = w @ c
        inv_bar = w @ (1.0 / s)
        # d w_m / dy = w_m * y * (inv_bar - 1/s_m)
        dh = flat * ((w * (inv_bar[:, None] - 1.0 / s)) @ c)
        return (h + flat * dh).reshape(y.shape)

    def to_config(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolant of ``(breakpoints, values)``.

    Outside the breakpoint hull the end values are held and a
    :class:`TabulationRangeWarning` is emitted.
    """

    xs: tuple[float, ...]
    values: tuple[float, ...]
    kind = "tabulated"
    has_jumps = False

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        vs = tuple(float(v) for v in self.values)
        if len(xs) < 2 or len(xs) != len(vs):
            raise ValueError("need >= 2 breakpoints with matching values")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("tabulated breakpoints must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vs)

    @property
    def breakpoints(self):
        return self.xs

    def out_of_range(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return (y < self.xs[0]) | (y > self.xs[-1])

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(self.out_of_range(y)):
            warnings.warn("tabulated nonlinearity clamped outside its range", TabulationRangeWarning, stacklevel=2)
        return np.interp(y, self.xs, self.values)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        xs, vs = np.asarray(self.xs), np.asarray(self.values)
        slopes = np.diff(vs) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, y, side="right") - 1, 0, slopes.size - 1)
        inside = ~self.out_of_range(y)
        return np.where(inside, slopes[idx], 0.0)

    def to_config(self):
        return {"kind": self.kind, "breakpoints": list(self.xs), "values": list(self.values)}


Nonlinearity = Union[Identity, Scale, SoftLimiter, Blanker, MixtureMmse, Tabulated]


def evaluate(g: Nonlinearity, y):
    return g(y)


def mixture_mmse(source_variance: float, noise: MixtureSpec) -> MixtureMmse:
    return MixtureMmse(float(source_variance), noise)


def from_config(cfg: dict[str, Any], resolve: Callable[[str], Nonlinearity] | None = None) -> Nonlinearity:
    """Build a nonlinearity from a config fragment.

    ``resolve`` handles fragments whose parameters live in the scenario
    (``mixture_mmse``, ``blanker`` with ``y_th: optimal``).
    """
    kind = str(cfg.get("kind", "")).lower()
    if kind == "identity":
        return Identity()
    if kind == "scale":
        return Scale(float(cfg["a"]))
    if kind == "soft_limiter":
        return SoftLimiter(float(cfg["y_th"]))
    if kind == "blanker":
        if str(cfg.get("y_th")).lower() == "optimal":
            if resolve is None:
                raise ValueError("blanker with y_th=optimal needs a scenario to resolve against")
            return resolve("optimal_blanker")
        return Blanker(float(cfg["y_th"]))
    if kind == "mixture_mmse":
        if resolve is None:
            raise ValueError("mixture_mmse needs a scenario to resolve against")
        return resolve("mixture_mmse")
    if kind == "tabulated":
        return Tabulated(tuple(cfg["breakpoints"]), tuple(cfg["values"]))
    raise ValueError(f"unknown nonlinearity kind {kind!r}")


def label(g: Nonlinearity) -> str:
    """Short human-readable tag used in CSV rows."""
    if isinstance(g, (SoftLimiter, Blanker)):
        return f"{g.kind}(y_th={g.y_th:.6g})"
    if isinstance(g, Scale):
        return f"scale(a={g.a:.6g})"
    return g.kind


@dataclass(frozen=True)
class ThresholdSearch:
    """Outcome of :func:`optimal_blanker_threshold`.

    ``degraded`` is set when the coarse scan found its minimum on the edge of
    the scanned range, so no interior bracket exists and ``threshold`` is the
    best grid point rather than a refined minimizer.
    """

    threshold: float
    mse: float
    degraded: bool
    n_evaluations: int


def optimal_blanker_threshold(
    source_variance: float,
    noise: MixtureSpec,
    settings=None,
    n_grid: int = 200,
    rtol: float = 1e-6,
) -> ThresholdSearch:
    """MSE-optimal blanker threshold for a Gaussian source in mixture noise.

    A 200-point log grid over ``[1e-3, 10] * sigma_Y`` locates a bracket,
    then golden-section search refines it to relative tolerance ``rtol``.
    """
    from scipy.optimize import minimize_scalar

    from .expectations import QuadratureSettings
    from .metrics import mse_for_gaussian_source

    settings = settings or QuadratureSettings()
    sy = math.sqrt(source_variance + noise.total_variance())
    calls = 0

    def objective(t):
        nonlocal calls
        calls += 1
        return mse_for_gaussian_source(Blanker(float(t)), source_variance, noise, settings)

    grid = np.geomspace(1e-3 * sy, 10.0 * sy, n_grid)
    values = np.array([objective(t) for t in grid])
    i = int(np.argmin(values))
    # a plateau within rounding of the minimum that reaches an end of the scan
    # counts as a boundary minimum
    ties = np.nonzero(values <= values[i] + 1e-12 * abs(values[i]))[0]
    if ties[-1] == n_grid - 1 or ties[0] == 0:
        j = n_grid - 1 if ties[-1] == n_grid - 1 else 0
        return ThresholdSearch(float(grid[j]), float(values[j]), True, calls)
    try:
        res = minimize_scalar(
            objective,
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            tol=rtol,
        )
    except ValueError:
        return ThresholdSearch(float(grid[i]), float(values[i]), True, calls)
    t, v = float(res.x), float(res.fun)
    if not (grid[i - 1] <= t <= grid[i + 1]) or v > values[i]:
        return ThresholdSearch(float(grid[i]), float(values[i]), True, calls)
    return ThresholdSearch(t, v, False, calls)
