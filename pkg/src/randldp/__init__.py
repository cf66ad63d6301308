"""Randomness-constrained local differential privacy toolkit."""

from .core import (
    PrivacyBudget,
    ProbVec,
    binary_entropy,
    column_support,
    hadamard_matrix,
    inverse_binary_entropy,
    shannon_entropy,
)

__all__ = [
    "PrivacyBudget",
    "ProbVec",
    "binary_entropy",
    "column_support",
    "hadamard_matrix",
    "inverse_binary_entropy",
    "shannon_entropy",
]

__version__ = "0.1.0"
