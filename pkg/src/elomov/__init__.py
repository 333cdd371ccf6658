"""Elo-style rating with a discretized margin of victory."""

from elomov.model import (
    DiscretizationScheme,
    ModelCoefficients,
    ScoreMap,
    category_probs,
    discretize,
    expected_score,
    grad_z,
    log_likelihood,
)

__all__ = [
    "DiscretizationScheme",
    "ModelCoefficients",
    "ScoreMap",
    "category_probs",
    "discretize",
    "expected_score",
    "grad_z",
    "log_likelihood",
]
