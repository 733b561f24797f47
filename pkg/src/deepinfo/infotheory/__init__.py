"""Gaussian-copula mutual information, redundancy and permutation nulls."""
from .copula import CopulaMatrix, average_ranks, copula_transform
from .gaussian import (
    MiEstimate,
    RedEstimate,
    co_information,
    entropy_bias,
    feature_co_information,
    feature_mi,
    gaussian_mi,
    gcmi,
    mi_from_covariance,
)
from .permutation import PermutationNull, permutation_null

__all__ = [
    "CopulaMatrix",
    "MiEstimate",
    "PermutationNull",
    "RedEstimate",
    "average_ranks",
    "co_information",
    "copula_transform",
    "entropy_bias",
    "feature_co_information",
    "feature_mi",
    "gaussian_mi",
    "gcmi",
    "mi_from_covariance",
    "permutation_null",
]
