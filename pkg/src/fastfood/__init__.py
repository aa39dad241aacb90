"""Fastfood: loglinear-time random feature expansions for kernel methods."""

from .baselines import DenseGaussianTransform, NystromMap, jacobi_eigh, nystrom_build
from .dotproduct import dotprod_features, dotprod_kernel_estimate
from .exceptions import DataError, NumericalError
from .hadamard import PaddedVector, fwht, fwht_inplace, naive_hadamard, pad_to_pow2
from .kernels import (
    RBF,
    AnchoredGaussian,
    DirectPoly,
    DotProductLegendre,
    LegendreCoeffs,
    Matern,
    Tabulated,
    exact_kernel_matrix,
    legendre_coeffs_from_kappa,
)
from .sampling import SeedSpec
from .transform import (
    AnchoredFeatureMap,
    FastfoodBlock,
    FastfoodTransform,
    apply_block,
    build_block,
)

__all__ = [
    "AnchoredFeatureMap",
    "AnchoredGaussian",
    "DataError",
    "DenseGaussianTransform",
    "DirectPoly",
    "DotProductLegendre",
    "FastfoodBlock",
    "FastfoodTransform",
    "LegendreCoeffs",
    "Matern",
    "NumericalError",
    "NystromMap",
    "PaddedVector",
    "RBF",
    "SeedSpec",
    "Tabulated",
    "apply_block",
    "build_block",
    "dotprod_features",
    "dotprod_kernel_estimate",
    "exact_kernel_matrix",
    "fwht",
    "fwht_inplace",
    "jacobi_eigh",
    "legendre_coeffs_from_kappa",
    "naive_hadamard",
    "nystrom_build",
    "pad_to_pow2",
]

__version__ = "0.1.0"
