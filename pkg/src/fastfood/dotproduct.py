"""Random features for dot-product kernels ``k(x, x') = kappa(<x, x'>)``.

Each feature picks a degree ``n`` with probability proportional to
``lambda_n dim H_n`` and a direction ``z`` uniform on the sphere, and
evaluates the homogeneous Legendre polynomial ``|x|^n L_{n,d}(<x, z>/|x|)``.
By the addition theorem the scaled average over features is an unbiased
estimate of ``sum_n lambda_n |x|^n |x'|^n L_{n,d}(cos angle)``.

Directions are the rows of unscaled Fastfood blocks ``H G Pi H B``,
restricted to the ``d`` input coordinates and normalized. Each such row is
an exactly isotropic Gaussian vector, so its direction is uniform.
"""

import math

import numpy as np

from .kernels import LegendreCoeffs, _legendre_table
from .sampling import SeedSpec, degree_sampler
from .transform import FastfoodTransform

__all__ = ["fastfood_directions", "dotprod_features", "dotprod_kernel_estimate"]

# stream for degree draws; block streams count up from 0
DEGREE_STREAM = (1 << 64) - 1


def fastfood_directions(d: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` unit vectors in ``R^d`` from normalized Fastfood rows."""
    tf = FastfoodTransform(d, count, seed=seed, scale=False)
    rows = tf.project(np.eye(d)).T
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return rows / norms


def _psi(X: np.ndarray, degrees: np.ndarray, directions: np.ndarray, d: int) -> np.ndarray:
    """``|x|^n_i L_{n_i,d}(<x, z_i>/|x|)`` for every row of ``X`` and feature ``i``."""
    r = np.linalg.norm(X, axis=1)
    if np.any(r == 0):
        raise ValueError("dot-product features need nonzero inputs")
    cos = np.clip((X @ directions.T) / r[:, None], -1.0, 1.0)
    out = np.empty_like(cos)
    for n in np.unique(degrees):
        cols = degrees == n
        out[:, cols] = _legendre_table(int(n), d, cos[:, cols])[int(n)] * (r[:, None] ** int(n))
    return out


def _draw(coeffs: LegendreCoeffs, count: int, seed: int):
    degrees = degree_sampler(coeffs, count, SeedSpec(seed, DEGREE_STREAM))
    return degrees, fastfood_directions(coeffs.d, count, seed)


def dotprod_features(X, coeffs: LegendreCoeffs, n: int, seed: int = 0) -> np.ndarray:
    """Features ``sqrt(Z/n) psi_i(x)``; their inner products give the kernel estimate."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != coeffs.d:
        raise ValueError(f"expected inputs of dimension {coeffs.d}, got {X.shape[1]}")
    degrees, directions = _draw(coeffs, n, seed)
    F = _psi(X, degrees, directions, coeffs.d) * math.sqrt(coeffs.Z / n)
    return F[0] if single else F


_CHUNK = 1 << 16


def dotprod_kernel_estimate(x, xp, coeffs: LegendreCoeffs, m: int, seed: int = 0,
                            return_se: bool = False):
    """``(Z/m) sum_i psi_i(x) psi_i(x')`` with ``m`` sampled features.

    With ``return_se=True`` also returns the Monte Carlo standard error.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    xp = np.asarray(xp, dtype=np.float64).ravel()
    if x.size != coeffs.d or xp.size != coeffs.d:
        raise ValueError(f"expected inputs of dimension {coeffs.d}")
    degrees, directions = _draw(coeffs, m, seed)
    pair = np.stack([x, xp])
    total = 0.0
    total_sq = 0.0
    for start in range(0, m, _CHUNK):
        sl = slice(start, min(start + _CHUNK, m))
        psi = _psi(pair, degrees[sl], directions[sl], coeffs.d)
        prod = coeffs.Z * psi[0] * psi[1]
        total += prod.sum()
        total_sq += (prod * prod).sum()
    mean = total / m
    if not return_se:
        return mean
    var = max(total_sq / m - mean * mean, 0.0) * m / max(m - 1, 1)
    return mean, math.sqrt(var / m)
