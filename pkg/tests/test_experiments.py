import math

import numpy as np
import pytest

from fastfood.experiments import (
    BenchRow,
    approx_error_curve,
    bench,
    median_time,
    sampler_diagnostics,
)
from fastfood.kernels import RBF
from fastfood.transform import FastfoodTransform, block_estimates


def test_error_curve_shape_and_determinism():
    a = approx_error_curve("fastfood", [16, 64], n_points=200, d=5, n_pairs=20, reps=3, seed=1)
    b = approx_error_curve("fastfood", [16, 64], n_points=200, d=5, n_pairs=20, reps=3, seed=1)
    assert [p.n for p in a] == [16, 64]
    assert a == b
    for p in a:
        assert p.reps == 3
        assert p.se == pytest.approx(p.std / math.sqrt(3))


def test_error_curve_single_rep_has_no_se():
    (p,) = approx_error_curve("rks", [32], n_points=50, d=3, n_pairs=10, reps=1)
    assert math.isnan(p.se) and p.mean_abs_error > 0


def test_error_curve_rejects_unknown_method():
    with pytest.raises(ValueError):
        approx_error_curve("nystrom", [16], n_points=10, d=2, n_pairs=2)


def test_hashed_and_stored_rks_curves_agree():
    a = approx_error_curve("rks", [64], n_points=100, d=4, n_pairs=10, reps=2)
    b = approx_error_curve("rks-hashed", [64], n_points=100, d=4, n_pairs=10, reps=2)
    assert a == b


def test_error_decreases_with_n():
    pts = approx_error_curve("rks", [64, 4096], n_points=500, d=5, n_pairs=50, reps=4)
    assert pts[1].mean_abs_error < pts[0].mean_abs_error / 4


def test_fastfood_block_variance_exceeds_iid():
    # Rows inside one block share G, Pi and B, so the per-block average of
    # cos(<v, w>) has more variance than an average of d independent rows.
    # The ratio stays bounded by a small constant.
    d = 64
    # a generic unit direction; axis vectors collapse H B v to a constant
    v = np.random.default_rng(0).standard_normal(d)
    v /= np.linalg.norm(v)
    tf = FastfoodTransform(d, d * 4000, RBF(1.0), seed=3)
    block_means = block_estimates(tf, v[None])[0]
    iid_var = 0.5 * (1 - math.exp(-1.0)) ** 2 / d
    ratio = block_means.var(ddof=1) / iid_var
    assert 1.3 <= ratio <= 2.3


def test_median_time_counts_calls():
    calls = []
    t = median_time(lambda: calls.append(1), reps=5, warmup=2)
    assert len(calls) == 7 and t >= 0


def test_bench_row_small():
    row = bench(16, 64, reps=3, warmup=1)
    assert isinstance(row, BenchRow)
    assert row.mem_ff == 4 * 16 * 8 * 4
    assert row.mem_rks == 64 * 16 * 8
    assert row.mem_ratio == pytest.approx(row.mem_rks / row.mem_ff)
    assert row.speedup == pytest.approx(row.t_rks / row.t_ff)
    assert set(row.as_dict()) == {"d", "n", "t_ff", "t_rks", "speedup", "mem_ff", "mem_rks"}


def test_sampler_diagnostics_pass_and_are_deterministic():
    rows = sampler_diagnostics(seed=0, count=20_000)
    assert all(r.passed for r in rows)
    again = sampler_diagnostics(seed=0, count=20_000)
    assert [(r.check, r.statistic) for r in rows] == [(r.check, r.statistic) for r in again]
    assert all(isinstance(r.statistic, float) and isinstance(r.passed, bool) for r in rows)
