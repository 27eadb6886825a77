"""Metric equational theories: proof kernel, saturation prover, finite models and free models."""

from metriq.config import ProverConfig
from metriq.errors import MetriqError
from metriq.metric import INF, ZERO, ExtReal, FinMetric, FinPseudoMetric
from metriq.theories import Theory, builtin

__version__ = "0.1.0"

__all__ = [
    "INF",
    "ZERO",
    "ExtReal",
    "FinMetric",
    "FinPseudoMetric",
    "MetriqError",
    "ProverConfig",
    "Theory",
    "builtin",
]
