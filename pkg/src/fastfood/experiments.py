"""Kernel approximation-error curves and speed/memory benchmarks."""

from dataclasses import dataclass, asdict
import math
import statistics
import time
from typing import Sequence

import numpy as np

from .baselines import DenseGaussianTransform
from .kernels import RBF, rbf_kernel
from .sampling import SeedSpec
from .transform import FastfoodTransform

__all__ = ["ErrorPoint", "approx_error_curve", "BenchRow", "bench", "median_time",
           "DiagRow", "sampler_diagnostics"]


@dataclass
class ErrorPoint:
    n: int
    mean_abs_error: float
    std: float
    se: float
    reps: int


def _make_map(method: str, d: int, n: int, sigma: float, seed: int):
    if method == "fastfood":
        return FastfoodTransform(d, n, RBF(sigma), seed)
    if method == "rks":
        return DenseGaussianTransform(d, n, sigma, seed)
    if method == "rks-hashed":
        return DenseGaussianTransform(d, n, sigma, seed, hashed=True)
    raise ValueError(f"approximation error supports fastfood and rks, got {method!r}")


def approx_error_curve(method: str, ns: Sequence[int], n_points: int = 4000, d: int = 10,
                       sigma: float = 1.0, n_pairs: int = 100, reps: int = 1,
                       seed: int = 0) -> list:
    """Mean ``|k_hat - k|`` of the RBF estimate against ``n``.

    ``n_points`` points are drawn uniformly from ``[0, 1]^d`` and ``n_pairs``
    pairs of distinct points are picked from them; the same pairs are used
    for every ``n``. For each ``n``, ``reps`` independently seeded maps are
    drawn. Pairs evaluated under one map share its randomness, so their
    errors are correlated; the standard error is therefore taken across maps.
    ``std`` is the spread of the per-map mean errors and ``se = std / sqrt(reps)``.
    With ``reps = 1`` no honest across-map spread exists and ``std`` and ``se``
    are NaN.
    """
    rng = SeedSpec(seed, 0).generator()
    X = rng.random((n_points, d))
    first = rng.integers(0, n_points, size=n_pairs)
    # offset in [1, n_points) keeps the two points of a pair distinct
    second = (first + rng.integers(1, n_points, size=n_pairs)) % n_points
    V = X[first] - X[second]
    exact = rbf_kernel(V, np.zeros(d), sigma)
    out = []
    for n in ns:
        errs = []
        for rep in range(reps):
            # seeds differ across (n, rep) so every map is independent
            fmap = _make_map(method, d, int(n), sigma, seed + 1 + rep + 1000 * int(n))
            est = np.mean(np.cos(fmap.project(V)), axis=1)
            errs.append(np.abs(est - exact))
        per_map = np.array([e.mean() for e in errs])
        std = float(per_map.std(ddof=1)) if reps > 1 else math.nan
        out.append(ErrorPoint(int(n), float(per_map.mean()), std, std / math.sqrt(reps), reps))
    return out


def median_time(fn, reps: int = 100, warmup: int = 3) -> float:
    """Median wall-clock seconds of ``fn()`` after ``warmup`` untimed calls."""
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


@dataclass
class BenchRow:
    d: int
    n: int
    t_ff: float
    t_rks: float
    speedup: float
    mem_ff: int
    mem_rks: int

    @property
    def mem_ratio(self) -> float:
        return self.mem_rks / self.mem_ff

    def as_dict(self) -> dict:
        return asdict(self)


def bench(d: int, n: int, reps: int = 100, warmup: int = 3, seed: int = 0,
          rks_reps: int = None) -> BenchRow:
    """Per-vector projection time of Fastfood versus a stored dense Gaussian matrix.

    Memory figures are the stored random parameters of each map.
    """
    x = SeedSpec(seed, 1).generator().standard_normal(d)
    ff = FastfoodTransform(d, n, RBF(1.0), seed)
    t_ff = median_time(lambda: ff.project(x), reps, warmup)
    rks = DenseGaussianTransform(d, n, 1.0, seed)
    t_rks = median_time(lambda: rks.project(x), rks_reps or reps, warmup)
    return BenchRow(d, n, t_ff, t_rks, t_rks / t_ff, ff.parameter_bytes, rks.parameter_bytes)


@dataclass
class DiagRow:
    check: str
    statistic: float
    threshold: float
    passed: bool

    def __post_init__(self):
        self.statistic = float(self.statistic)
        self.threshold = float(self.threshold)
        self.passed = bool(self.passed)


def sampler_diagnostics(seed: int = 0, count: int = 100_000) -> list:
    """Goodness-of-fit and moment checks for the radial and degree samplers."""
    from scipy import stats

    from .kernels import LegendreCoeffs
    from .sampling import (ChiRBF, MaternConv, TabulatedDensity, degree_sampler,
                           radial_draws, uniform_sphere)

    rows = []
    for d in (4, 64):
        r = radial_draws(ChiRBF(d), count, SeedSpec(seed, d))
        p = stats.kstest(r, stats.chi(d).cdf).pvalue
        rows.append(DiagRow(f"chi_rbf_ks_pvalue_d{d}", p, 1e-3, p > 1e-3))
    d, t = 4, 3
    r = radial_draws(MaternConv(d, t), count, SeedSpec(seed, 100))
    target = t * d / (d + 2)
    rel = abs(np.mean(r * r) / target - 1.0)
    rows.append(DiagRow("matern_second_moment_rel_err", rel, 0.02, rel <= 0.02))
    tab = TabulatedDensity.from_callable(8, lambda x: np.exp(-0.5 * x * x), 12.0)
    r = radial_draws(tab, count, SeedSpec(seed, 101))
    p = stats.kstest(r, stats.chi(8).cdf).pvalue
    rows.append(DiagRow("tabulated_gaussian_ks_pvalue_d8", p, 1e-3, p > 1e-3))
    z = uniform_sphere(count, 3, SeedSpec(seed, 102))
    dev = float(np.max(np.abs(z.T @ z / count - np.eye(3) / 3)))
    tol = 5.0 / math.sqrt(count)
    rows.append(DiagRow("sphere_second_moment_max_dev", dev, tol, dev <= tol))
    coeffs = LegendreCoeffs(3, [1.0, 0.5, 0.25])
    deg = degree_sampler(coeffs, count, SeedSpec(seed, 103))
    observed = np.bincount(deg, minlength=3)
    expected = coeffs.weights / coeffs.Z * count
    p = stats.chisquare(observed, expected).pvalue
    rows.append(DiagRow("degree_sampler_chisq_pvalue", p, 1e-3, p > 1e-3))
    return rows
