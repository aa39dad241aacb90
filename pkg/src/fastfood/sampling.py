"""Seeded randomness for every stochastic component.

All draws come from counter-based Philox streams keyed by
``(master_seed, stream_id)``, so a block's parameters depend only on its own
key and never on construction order or threading.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtri

__all__ = [
    "SeedSpec",
    "ChiRBF",
    "MaternConv",
    "TabulatedDensity",
    "RadialSampler",
    "rademacher_diag",
    "gaussian_diag",
    "random_permutation",
    "uniform_sphere",
    "uniform_ball",
    "radial_draws",
    "degree_sampler",
    "hashed_gaussian",
    "splitmix64",
]

_MASK64 = (1 << 64) - 1


def _u64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value <= _MASK64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


@dataclass(frozen=True)
class SeedSpec:
    """Key of one independent random stream."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", _u64(self.master_seed, "master_seed"))
        object.__setattr__(self, "stream_id", _u64(self.stream_id, "stream_id"))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=np.array([self.master_seed, self.stream_id], dtype=np.uint64))
        )

    def substream(self, index: int) -> "SeedSpec":
        """Stream derived from this one by mixing in ``index``."""
        mixed = int(splitmix64(np.uint64(self.stream_id) ^ splitmix64(np.uint64(_u64(index, "index")))))
        return SeedSpec(self.master_seed, mixed)


def splitmix64(x):
    """SplitMix64 finalizer; vectorized over uint64 arrays, wraps mod 2**64."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    raise TypeError(f"expected SeedSpec or Generator, got {type(seed).__name__}")


def _check_count(n: int, name: str = "d") -> int:
    n = int(n)
    if n < 1:
        raise ValueError(f"{name} must be >= 1, got {n}")
    return n


def rademacher_diag(d: int, seed) -> np.ndarray:
    """``d`` iid signs, +1 or -1 with probability 1/2 each (as float64)."""
    d = _check_count(d)
    rng = _as_generator(seed)
    return rng.integers(0, 2, size=d).astype(np.float64) * 2.0 - 1.0


def gaussian_diag(d: int, seed) -> np.ndarray:
    d = _check_count(d)
    return _as_generator(seed).standard_normal(d)


def random_permutation(d: int, seed) -> np.ndarray:
    """Uniform permutation of ``0..d-1`` obtained by sorting uniform keys."""
    d = _check_count(d)
    keys = _as_generator(seed).random(d)
    return np.argsort(keys, kind="stable")


def uniform_sphere(count: int, dim: int, seed) -> np.ndarray:
    """``count`` points uniform on the unit sphere in ``R^dim``."""
    count = _check_count(count, "count")
    dim = _check_count(dim, "dim")
    g = _as_generator(seed).standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero draw has probability zero; guard anyway
    norms[norms == 0.0] = 1.0
    return g / norms


def uniform_ball(count: int, dim: int, seed) -> np.ndarray:
    """Uniform points in the unit ball: sphere direction times ``U**(1/dim)``."""
    rng = _as_generator(seed)
    directions = uniform_sphere(count, dim, rng)
    radii = rng.random(count) ** (1.0 / dim)
    return directions * radii[:, None]


# --- radial laws ---------------------------------------------------------


@dataclass(frozen=True)
class ChiRBF:
    """Norm of a standard Gaussian vector in ``R^d``; density ~ r^(d-1) exp(-r^2/2)."""

    d: int


@dataclass(frozen=True)
class MaternConv:
    """Norm of a sum of ``t`` iid uniform draws from the unit ball in ``R^d``."""

    d: int
    t: int


@dataclass(frozen=True, eq=False)
class TabulatedDensity:
    """Radial law with density proportional to ``r^(d-1) * spectrum(r)``.

    ``spectrum`` is the radial part of a spectral density sampled on the
    increasing grid ``r``. Draws use linear interpolation of the inverse CDF,
    so the sampler carries an ``O(1/len(r))`` discretization error.
    """

    d: int
    r: np.ndarray
    spectrum: np.ndarray

    GRID_SIZE = 4096

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64)
        lam = np.asarray(self.spectrum, dtype=np.float64)
        if r.ndim != 1 or r.shape != lam.shape or r.size < 2:
            raise ValueError("r and spectrum must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radial grid must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("spectral density must be finite and nonnegative")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "spectrum", lam)
        pdf = r ** (self.d - 1) * lam
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(r))])
        total = cdf[-1]
        if not np.isfinite(total) or total <= 0:
            raise ValueError("radial density is not normalizable on the grid")
        cdf = cdf / total
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        object.__setattr__(self, "_cdf", cdf[keep])
        object.__setattr__(self, "_grid", r[keep])

    @classmethod
    def from_callable(cls, d: int, spectrum, r_max: float, size: int = GRID_SIZE):
        r = np.linspace(0.0, float(r_max), int(size))
        return cls(d, r, np.asarray(spectrum(r), dtype=np.float64))

    def cdf(self, x) -> np.ndarray:
        return np.interp(x, self._grid, self._cdf)

    def ppf(self, u) -> np.ndarray:
        return np.interp(u, self._cdf, self._grid)


RadialSampler = Union[ChiRBF, MaternConv, TabulatedDensity]

_BALL_CHUNK = 1 << 20


def radial_draws(sampler: RadialSampler, count: int, seed) -> np.ndarray:
    """Draw ``count`` iid nonnegative scales from ``sampler``'s radial law."""
    count = _check_count(count, "count")
    rng = _as_generator(seed)
    if isinstance(sampler, ChiRBF):
        # chi-square(d) is the law of a sum of d squared standard normals
        return np.sqrt(rng.chisquare(_check_count(sampler.d), size=count))
    if isinstance(sampler, MaternConv):
        d = _check_count(sampler.d)
        t = _check_count(sampler.t, "t")
        out = np.empty(count)
        step = max(1, _BALL_CHUNK // (d * t))
        for start in range(0, count, step):
            m = min(step, count - start)
            total = np.zeros((m, d))
            for _ in range(t):
                total += uniform_ball(m, d, rng)
            out[start:start + m] = np.linalg.norm(total, axis=1)
        return out
    if isinstance(sampler, TabulatedDensity):
        return sampler.ppf(rng.random(count))
    raise TypeError(f"unknown radial sampler {sampler!r}")


def degree_sampler(coeffs, count: int, seed) -> np.ndarray:
    """Draw Legendre degrees with probability proportional to ``coeffs.weights``.

    ``coeffs`` is a :class:`fastfood.kernels.LegendreCoeffs`; its weights are
    ``lambda_n`` times the multiplicity of degree ``n``.
    """
    count = _check_count(count, "count")
    lam = np.asarray(coeffs.lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("Legendre coefficients must be nonnegative (kernel not PSD)")
    weights = np.asarray(coeffs.weights, dtype=np.float64)
    total = weights.sum()
    if not total > 0:
        raise ValueError("all Legendre coefficients are zero")
    return _as_generator(seed).choice(weights.size, size=count, p=weights / total)


_HASH_I = np.uint64(0xD6E8FEB86659FD93)
_HASH_J = np.uint64(0xA0761D6478BD642F)
_TWO_M53 = 2.0 ** -53


def hashed_gaussian(i, j, master_seed: int) -> np.ndarray:
    """Standard normal ``Z_ij`` recomputed from a hash of ``(i, j, seed)``.

    ``xi = (h(i, j) + 1/2) / 2**53`` with ``h`` a 53-bit SplitMix64 hash, then
    ``Z = Phi^{-1}(xi)``. Vectorized over broadcastable index arrays.
    """
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    key = np.uint64(_u64(master_seed, "master_seed"))
    with np.errstate(over="ignore"):
        h = splitmix64(splitmix64(key ^ (i * _HASH_I)) + j * _HASH_J)
    u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53
    return ndtri(u)
