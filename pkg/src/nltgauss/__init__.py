"""Linear-regression gains, SNR/MSE and capacity bounds for memoryless
nonlinearities driven by sums of Gaussian and Gaussian-mixture inputs."""

from .distributions import (
    ClassAParams,
    Gaussian,
    Laplace,
    Mixture,
    MixtureSpec,
    Triangular,
    Uniform,
    class_a_mixture,
)
from .expectations import Estimate, McSettings, QuadratureSettings
from .gains import (
    GainSet,
    Scenario,
    gain_gaussian,
    gain_scarano_crosscheck,
    gains_analytic,
    gains_double_mixture,
    gains_empirical,
    gains_mixture,
    split_power,
)
from .metrics import MetricSet, linear_estimates_from_output, metric_set, mutual_information_histogram
from .nonlinearities import Blanker, Identity, MixtureMmse, Scale, SoftLimiter, Tabulated

__version__ = "0.1.0"

__all__ = [
    "Blanker",
    "ClassAParams",
    "Estimate",
    "GainSet",
    "Gaussian",
    "Identity",
    "Laplace",
    "McSettings",
    "MetricSet",
    "Mixture",
    "MixtureMmse",
    "MixtureSpec",
    "QuadratureSettings",
    "Scale",
    "Scenario",
    "SoftLimiter",
    "Tabulated",
    "Triangular",
    "Uniform",
    "class_a_mixture",
    "gain_gaussian",
    "gain_scarano_crosscheck",
    "gains_analytic",
    "gains_double_mixture",
    "gains_empirical",
    "gains_mixture",
    "linear_estimates_from_output",
    "metric_set",
    "mutual_information_histogram",
    "split_power",
]
