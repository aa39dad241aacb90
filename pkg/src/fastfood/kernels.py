"""Kernel descriptions and exact kernel evaluation.

Covers the translation-invariant kernels approximated by Fastfood (Gaussian
RBF, Matern via Bessel functions), the anchored Gaussian template, and the
dot-product kernel machinery: Legendre polynomials in ``d`` dimensions,
expansion coefficients, and the direct polynomial expansion with its
Gamma-function closed form.
"""

from dataclasses import dataclass, field
import math
from typing import Sequence, Union

import numpy as np
from scipy.special import roots_jacobi, gammaln

from .sampling import uniform_sphere

__all__ = [
    "RBF",
    "Matern",
    "Tabulated",
    "DotProductLegendre",
    "DirectPoly",
    "AnchoredGaussian",
    "KernelSpec",
    "LegendreCoeffs",
    "rbf_kernel",
    "matern_kernel",
    "matern_profile",
    "exact_kernel_matrix",
    "legendre_eval",
    "homogeneous_legendre",
    "count_monomials",
    "harmonic_dimension",
    "legendre_coeffs_from_kappa",
    "sphere_area",
    "direct_poly_closed_form",
    "direct_poly_mc",
    "anchored_exponents",
    "anchored_kernel",
]


# --- kernel specifications -------------------------------------------------


def _positive(value, name):
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class RBF:
    """Gaussian RBF kernel ``exp(-|x - x'|^2 / (2 sigma^2))``."""

    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive(self.sigma, "sigma"))


@dataclass(frozen=True)
class Matern:
    """Bessel-type Matern kernel whose spectrum is a ``t``-fold ball convolution."""

    sigma: float = 1.0
    t: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive(self.sigma, "sigma"))
        if int(self.t) != self.t or self.t < 1:
            raise ValueError(f"t must be a positive integer, got {self.t}")
        object.__setattr__(self, "t", int(self.t))


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Radial kernel given only by a sampled radial spectral density."""

    sigma: float
    r: np.ndarray
    spectrum: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive(self.sigma, "sigma"))


@dataclass(frozen=True, eq=False)
class DotProductLegendre:
    coeffs: "LegendreCoeffs"


@dataclass(frozen=True, eq=False)
class DirectPoly:
    """``sum_p c_p E_v[<x,v>^p <x',v>^p]`` with ``v`` uniform on the sphere."""

    c: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.c)
        if not c or any(v < 0 or not math.isfinite(v) for v in c):
            raise ValueError("polynomial coefficients must be finite and nonnegative")
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class AnchoredGaussian:
    """Gaussian bumps of width ``a`` at anchors with density ~ exp(-b|z|^2/2)."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive(self.a, "a"))
        object.__setattr__(self, "b", _positive(self.b, "b"))


KernelSpec = Union[RBF, Matern, Tabulated, DotProductLegendre, DirectPoly, AnchoredGaussian]


# --- translation-invariant kernels -----------------------------------------


def _sqdist(x, xp) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    xp = np.asarray(xp, dtype=np.float64)
    if x.shape[-1] != xp.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {xp.shape[-1]}")
    return np.sum((x - xp) ** 2, axis=-1)


def rbf_kernel(x, xp, sigma: float):
    sigma = _positive(sigma, "sigma")
    return np.exp(-_sqdist(x, xp) / (2.0 * sigma * sigma))


_SERIES_MIN_TERMS = 40
_SERIES_MAX_TERMS = 400
_SERIES_RTOL = 1e-16
MATERN_MAX_RADIUS = 30.0


def _ball_charfn(r: np.ndarray, nu: float) -> np.ndarray:
    """``Gamma(nu+1) (2/r)^nu J_nu(r)`` from the ascending series.

    Equals ``sum_m (-1)^m Gamma(nu+1) / (m! Gamma(m+nu+1)) (r/2)^(2m)``, which is
    1 at ``r = 0``. Cancellation grows like ``exp(r)``, so accuracy degrades
    for large radii; radii above ``MATERN_MAX_RADIUS`` are refused.
    """
    q = -(r * r) / 4.0
    term = np.ones_like(r)
    total = np.ones_like(r)
    for m in range(1, _SERIES_MAX_TERMS):
        term = term * q / (m * (m + nu))
        total += term
        if m >= _SERIES_MIN_TERMS and np.all(
            np.abs(term) <= _SERIES_RTOL * np.maximum(np.abs(total), 1e-300)
        ):
            break
    return total


def matern_profile(r, dim: int, t: int) -> np.ndarray:
    """Normalized Matern kernel as a function of the scaled distance ``r``.

    ``k(r) = [Gamma(nu+1) (2/r)^nu J_nu(r)]^t`` with ``nu = dim/2``; this is the
    characteristic function of a sum of ``t`` uniform unit-ball vectors.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r > MATERN_MAX_RADIUS):
        raise ValueError(f"Matern series limited to scaled radius <= {MATERN_MAX_RADIUS}")
    return _ball_charfn(r, dim / 2.0) ** int(t)


def matern_kernel(x, xp, sigma: float, t: int, dim: int = None):
    """Matern kernel with ``nu = dim / 2``; ``dim`` defaults to the input length."""
    sigma = _positive(sigma, "sigma")
    if int(t) != t or t < 1:
        raise ValueError(f"t must be a positive integer, got {t}")
    x = np.asarray(x, dtype=np.float64)
    if dim is None:
        dim = x.shape[-1]
    return matern_profile(np.sqrt(_sqdist(x, xp)) / sigma, dim, t)


def exact_kernel_matrix(spec: KernelSpec, X, Y=None, dim: int = None) -> np.ndarray:
    """Dense Gram matrix ``K[i, j] = k(X[i], Y[j])`` for kernels with an oracle."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if isinstance(spec, (RBF, Matern)):
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(Y * Y, axis=1)[None, :]
            - 2.0 * X @ Y.T
        )
        np.maximum(sq, 0.0, out=sq)
        if isinstance(spec, RBF):
            return np.exp(-sq / (2.0 * spec.sigma ** 2))
        return matern_profile(np.sqrt(sq) / spec.sigma, dim or X.shape[1], spec.t)
    if isinstance(spec, DotProductLegendre):
        return spec.coeffs.kernel(X[:, None, :], Y[None, :, :])
    if isinstance(spec, DirectPoly):
        return direct_poly_closed_form(X[:, None, :], Y[None, :, :], spec.c, X.shape[1])
    if isinstance(spec, AnchoredGaussian):
        return anchored_kernel(X[:, None, :], Y[None, :, :], spec.a, spec.b)
    raise TypeError(f"no exact kernel for {type(spec).__name__}")


# --- Legendre polynomials in d dimensions ------------------------------------


def _legendre_table(max_n: int, d: int, t: np.ndarray) -> np.ndarray:
    """Rows ``L_{0,d}(t) .. L_{max_n,d}(t)`` by the three-term recurrence."""
    out = np.empty((max_n + 1,) + t.shape)
    out[0] = 1.0
    if max_n >= 1:
        out[1] = t
    for n in range(1, max_n):
        out[n + 1] = ((2 * n + d - 2) * t * out[n] - n * out[n - 1]) / (n + d - 2)
    return out


def _check_legendre_args(n, d):
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")


def legendre_eval(n: int, d: int, t):
    """``L_{n,d}(t)``, the Legendre polynomial of degree ``n`` in ``d`` dimensions.

    Normalized so that ``L_{n,d}(1) = 1``; orthogonal on ``[-1, 1]`` under
    the weight ``(1 - t^2)^((d-3)/2)``.
    """
    _check_legendre_args(n, d)
    t = np.asarray(t, dtype=np.float64)
    if np.any(np.abs(t) > 1.0 + 1e-12):
        raise ValueError("Legendre argument must lie in [-1, 1]")
    return _legendre_table(int(n), int(d), t)[int(n)]


def homogeneous_legendre(n: int, d: int, tcoord, r):
    """``r^n L_{n,d}(tcoord / r)``, the degree-``n`` homogeneous extension."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0):
        raise ValueError("radius must be positive")
    tcoord = np.asarray(tcoord, dtype=np.float64)
    ratio = tcoord / r
    if np.any(np.abs(ratio) > 1.0 + 1e-12):
        raise ValueError("|tcoord| must not exceed r")
    return r ** n * legendre_eval(n, d, np.clip(ratio, -1.0, 1.0))


_U64_MAX = (1 << 64) - 1


def count_monomials(d: int, n: int) -> int:
    """``N(d, n) = (d+n-1)! / (n! (d-1)!)``, homogeneous degree-``n`` monomials in ``d`` variables."""
    if int(d) != d or d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if int(n) != n or n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    d, n = int(d), int(n)
    k = min(n, d - 1)
    out = 1
    for i in range(1, k + 1):
        out = out * (d + n - i) // i
    if out > _U64_MAX:
        raise OverflowError(f"N({d}, {n}) exceeds 64 bits")
    return out


def harmonic_dimension(d: int, n: int) -> int:
    """Number of linearly independent degree-``n`` spherical harmonics in ``R^d``.

    This is ``N(d, n) - N(d, n-2)``, the multiplicity that appears in the
    addition theorem ``E_z[L_n(<x,z>) L_n(<x',z>)] = L_n(<x,x'>) / dim``.
    """
    if n < 2:
        return count_monomials(d, n)
    return count_monomials(d, n) - count_monomials(d, n - 2)


@dataclass(frozen=True, eq=False)
class LegendreCoeffs:
    """Coefficients ``lambda_n`` of ``kappa(xi) = sum_n lambda_n L_{n,d}(xi)``.

    Attributes
    ----------
    d : int
        Ambient dimension of the inputs.
    lam : np.ndarray
        ``lambda_0 .. lambda_P``, all nonnegative.
    """

    d: int
    lam: np.ndarray
    multiplicity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=np.float64).ravel()
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        if lam.size == 0 or not np.all(np.isfinite(lam)):
            raise ValueError("coefficients must be a nonempty finite array")
        if np.any(lam < 0):
            raise ValueError("negative Legendre coefficient: kernel is not positive semidefinite")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "lam", lam)
        mult = np.array([harmonic_dimension(self.d, n) for n in range(lam.size)], dtype=np.float64)
        object.__setattr__(self, "multiplicity", mult)
        if not self.Z > 0:
            raise ValueError("all Legendre coefficients are zero")

    @property
    def max_degree(self) -> int:
        return self.lam.size - 1

    @property
    def weights(self) -> np.ndarray:
        """Unnormalized degree probabilities ``lambda_n * dim H_n``."""
        return self.lam * self.multiplicity

    @property
    def Z(self) -> float:
        return float(self.weights.sum())

    def kappa(self, xi):
        """``sum_n lambda_n L_{n,d}(xi)`` for ``xi`` in ``[-1, 1]``."""
        xi = np.asarray(xi, dtype=np.float64)
        return np.tensordot(self.lam, _legendre_table(self.max_degree, self.d, xi), axes=1)

    def kernel(self, x, xp):
        """``sum_n lambda_n |x|^n |x'|^n L_{n,d}(cos angle)``."""
        x = np.asarray(x, dtype=np.float64)
        xp = np.asarray(xp, dtype=np.float64)
        nx = np.linalg.norm(x, axis=-1)
        nxp = np.linalg.norm(xp, axis=-1)
        denom = nx * nxp
        safe = np.where(denom > 0, denom, 1.0)
        cos = np.clip(np.sum(x * xp, axis=-1) / safe, -1.0, 1.0)
        cos = np.where(denom > 0, cos, 0.0)
        table = _legendre_table(self.max_degree, self.d, cos)
        powers = denom[None, ...] ** np.arange(self.max_degree + 1).reshape((-1,) + (1,) * np.ndim(denom))
        return np.tensordot(self.lam, table * powers, axes=1)

    def to_text(self) -> str:
        return "\n".join([str(self.d)] + [repr(float(v)) for v in self.lam]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LegendreCoeffs":
        tokens = text.split()
        if len(tokens) < 2:
            raise ValueError("expected a dimension followed by coefficients")
        return cls(int(tokens[0]), [float(v) for v in tokens[1:]])


def legendre_coeffs_from_kappa(kappa, d: int, max_degree: int, nodes: int = None) -> LegendreCoeffs:
    """Project ``kappa`` on ``L_{0,d} .. L_{P,d}`` under ``(1-t^2)^((d-3)/2)``.

    Uses Gauss-Jacobi nodes for that weight (``4 (P + 1)`` by default), which
    integrate polynomial ``kappa`` exactly. Coefficients below ``-1e-10``
    signal a non-PSD kernel; smaller negatives are rounding and clamp to 0.
    """
    _check_legendre_args(max_degree, d)
    P = int(max_degree)
    nodes = 4 * (P + 1) if nodes is None else int(nodes)
    alpha = (d - 3) / 2.0
    t, w = roots_jacobi(nodes, alpha, alpha)
    values = np.asarray(kappa(t), dtype=np.float64) * np.ones_like(t)
    table = _legendre_table(P, d, t)
    lam = (table @ (w * values)) / (table ** 2 @ w)
    if np.any(lam < -1e-10):
        bad = int(np.argmin(lam))
        raise ValueError(f"kappa is not positive semidefinite: lambda_{bad} = {lam[bad]:.3e}")
    return LegendreCoeffs(d, np.maximum(lam, 0.0))


# --- direct polynomial expansion ------------------------------------------------


def sphere_area(k: int) -> float:
    """Surface area of the unit sphere ``S_k`` in ``R^(k+1)``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def _direct_poly_term(p: int, d: int, theta):
    """``E_v[<x,v>^p <x',v>^p]`` for unit ``x, x'`` at cosine ``theta``."""
    lead = math.log(sphere_area(d - 3)) - math.log(sphere_area(d - 1))
    total = np.zeros_like(theta)
    sin2 = np.clip(1.0 - theta * theta, 0.0, None)
    for i in range(0, p + 1, 2):
        log_coef = (
            lead
            + math.log(math.comb(p, i))
            + gammaln((2 * p - i + 1) / 2.0)
            + gammaln((i + 1) / 2.0)
            + gammaln((d - 2) / 2.0)
            - gammaln((2 * p + d) / 2.0)
        )
        total = total + math.exp(log_coef) * theta ** (p - i) * sin2 ** (i // 2)
    return total


def direct_poly_closed_form(x, xp, c: Sequence[float], d: int = None):
    """Closed form of ``sum_p c_p E_v[<x,v>^p <x',v>^p]``, ``v`` uniform on ``S_{d-1}``.

    Odd ``i`` terms of the binomial sum vanish and are skipped.
    """
    x = np.asarray(x, dtype=np.float64)
    xp = np.asarray(xp, dtype=np.float64)
    if d is None:
        d = x.shape[-1]
    if d < 4:
        raise ValueError(f"closed form needs d >= 4, got {d}")
    nx = np.linalg.norm(x, axis=-1)
    nxp = np.linalg.norm(xp, axis=-1)
    denom = nx * nxp
    safe = np.where(denom > 0, denom, 1.0)
    theta = np.clip(np.sum(x * xp, axis=-1) / safe, -1.0, 1.0)
    total = np.zeros(np.broadcast(nx, nxp).shape)
    for p, cp in enumerate(c):
        if cp == 0:
            continue
        total = total + cp * denom ** p * _direct_poly_term(p, d, theta)
    return total


def direct_poly_mc(x, xp, c: Sequence[float], d: int, m: int, seed, return_se: bool = False):
    """Monte Carlo estimate of the direct polynomial kernel from ``m`` sphere draws."""
    x = np.asarray(x, dtype=np.float64)
    xp = np.asarray(xp, dtype=np.float64)
    if x.shape != (d,) or xp.shape != (d,):
        raise ValueError(f"expected two vectors of length {d}")
    m = int(m)
    chunk = 1 << 18
    rng = seed.generator() if hasattr(seed, "generator") else seed
    s1 = 0.0
    s2 = 0.0
    for start in range(0, m, chunk):
        v = uniform_sphere(min(chunk, m - start), d, rng)
        a = v @ x
        b = v @ xp
        vals = np.zeros_like(a)
        for p, cp in enumerate(c):
            if cp:
                vals += cp * (a * b) ** p
        s1 += vals.sum()
        s2 += (vals * vals).sum()
    mean = s1 / m
    if not return_se:
        return mean
    var = max(s2 / m - mean * mean, 0.0) * m / max(m - 1, 1)
    return mean, math.sqrt(var / m)


# --- anchored Gaussian template ----------------------------------------------------


def anchored_exponents(a: float, b: float):
    """Coefficients ``(c_norm, c_dist)`` of the anchored-template kernel.

    ``k(x, x') ~ exp(-c_norm (|x|^2 + |x'|^2) - c_dist |x - x'|^2)`` with
    ``c_norm = (a/2) b / (2a + b)`` and ``c_dist = a^2 / (4a + 2b)``.
    At ``b = 0`` these are ``0`` and ``a/4``.
    """
    a = float(a)
    b = float(b)
    return 0.5 * a * b / (2.0 * a + b), a * a / (4.0 * a + 2.0 * b)


def anchored_kernel(x, xp, a: float, b: float):
    """Anchored Gaussian kernel, up to its constant factor."""
    _positive(a, "a")
    _positive(b, "b")
    x = np.asarray(x, dtype=np.float64)
    xp = np.asarray(xp, dtype=np.float64)
    c_norm, c_dist = anchored_exponents(a, b)
    return np.exp(
        -c_norm * (np.sum(x * x, axis=-1) + np.sum(xp * xp, axis=-1))
        - c_dist * _sqdist(x, xp)
    )
