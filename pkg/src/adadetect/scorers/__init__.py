"""Pluggable score functions for the detection pipeline."""

from .base import BaseScorer
from .density import (
    DensityRatioScorer,
    GaussianShrinkageDensity,
    HistogramDensity,
    OracleScorer,
    TwoComponentGaussianMixture,
    histogram_density,
)
from .pu import PUClassifierScorer
from .simple import ChiSquareScorer, ConstantScorer, FixedScorer, LinearScorer

__all__ = [
    "BaseScorer",
    "ChiSquareScorer",
    "ConstantScorer",
    "DensityRatioScorer",
    "FixedScorer",
    "GaussianShrinkageDensity",
    "HistogramDensity",
    "LinearScorer",
    "OracleScorer",
    "PUClassifierScorer",
    "TwoComponentGaussianMixture",
    "histogram_density",
]
