import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastfood.exceptions import DataError, NumericalError
from fastfood.kernels import RBF, exact_kernel_matrix
from fastfood.learn import (
    Dataset,
    fit_evaluate,
    kernel_ridge_fit,
    load_table,
    predict,
    read_matrix,
    ridge_fit,
    rmse,
    synth_gp_data,
    train_test_split,
    write_table,
)
from fastfood.transform import FastfoodTransform
from reference import gaussian_elimination_solve


# --- tables ---------------------------------------------------------------------------


def test_load_header_and_target_by_name(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b,y\n1,2,3\n4,5,6\n")
    data = load_table(p, "y")
    np.testing.assert_array_equal(data.X, [[1, 2], [4, 5]])
    np.testing.assert_array_equal(data.y, [3, 6])
    assert data.columns == ["a", "b"]
    data = load_table(p, "a")
    np.testing.assert_array_equal(data.y, [1, 4])


def test_load_whitespace_comments_and_index(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("# comment\n1 2 3\n\n4\t5   6\n")
    data = load_table(p, 0)
    np.testing.assert_array_equal(data.y, [1, 4])
    np.testing.assert_array_equal(data.X, [[2, 3], [5, 6]])
    np.testing.assert_array_equal(load_table(p, "-1").y, [3, 6])


def test_load_reports_bad_cell(tmp_path):
    p = tmp_path / "bad.csv"
    rows = [f"{i},{i + 1}" for i in range(10)]
    rows[6] = "6,abc"
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match=r"row 7, column 2"):
        load_table(p)


def test_load_reports_ragged_row(tmp_path):
    p = tmp_path / "ragged.csv"
    p.write_text("1,2\n3,4,5\n")
    with pytest.raises(DataError, match="row 2"):
        load_table(p)


@pytest.mark.parametrize("content, target", [("", -1), ("a,b\n", -1), ("1,2\n", "z"), ("1,2\n", 5), ("1\n2\n", -1)])
def test_load_rejects(tmp_path, content, target):
    p = tmp_path / "x.csv"
    p.write_text(content)
    with pytest.raises(DataError):
        load_table(p, target)


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_table(tmp_path / "nope.csv")


@settings(max_examples=20)
@given(st.integers(1, 20), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_write_read_roundtrip_bit_exact(tmp_path_factory, m, d, seed):
    X = np.random.default_rng(seed).standard_normal((m, d)) * 10.0 ** np.random.default_rng(seed).integers(-30, 30)
    p = tmp_path_factory.mktemp("rt") / "x.csv"
    write_table(p, X, header=[f"c{i}" for i in range(d)], comment="generated")
    table, header = read_matrix(p)
    np.testing.assert_array_equal(table, X)
    assert header == [f"c{i}" for i in range(d)]


# --- ridge ----------------------------------------------------------------------------


def test_ridge_matches_gaussian_elimination():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((50, 20))
    y = rng.standard_normal(50)
    model = ridge_fit(F, y, lam=0.1)
    ref = gaussian_elimination_solve(F.T @ F + 0.1 * np.eye(20), F.T @ y)
    np.testing.assert_allclose(model.w, ref, rtol=1e-10, atol=1e-12)


def test_ridge_huge_lambda_shrinks_to_zero():
    rng = np.random.default_rng(1)
    F = rng.standard_normal((30, 5))
    model = ridge_fit(F, rng.standard_normal(30), lam=1e12)
    assert np.abs(model.w).max() < 1e-9


def test_ridge_small_lambda_interpolates():
    rng = np.random.default_rng(2)
    F = rng.standard_normal((10, 40))
    y = rng.standard_normal(10)
    model = ridge_fit(F, y, lam=1e-10)
    np.testing.assert_allclose(predict(model, features=F), y, atol=1e-6)


def test_ridge_singular_raises_numerical_error():
    with pytest.raises(NumericalError, match="lambda"):
        ridge_fit(np.zeros((4, 3)), np.ones(4), lam=0.0)


def test_ridge_validation():
    with pytest.raises(ValueError):
        ridge_fit(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValueError):
        ridge_fit(np.ones((3, 2)), np.ones(3), lam=-1.0)
    model = ridge_fit(np.eye(3), np.ones(3), lam=1.0)
    with pytest.raises(ValueError):
        model.predict(np.ones((1, 3)))
    with pytest.raises(ValueError):
        model.predict(features=np.ones((1, 4)))


def test_ridge_with_transform_predicts_from_inputs():
    tf = FastfoodTransform(3, 16, RBF(1.0), seed=0)
    X = np.random.default_rng(3).standard_normal((20, 3))
    y = np.sin(X[:, 0])
    model = ridge_fit(tf.features(X), y, 1e-3, tf)
    np.testing.assert_allclose(model.predict(X), model.predict(features=tf.features(X)))


def test_rmse_examples():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
    assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))
    with pytest.raises(ValueError):
        rmse([1, 2], [1])


def test_kernel_ridge_matches_direct_solve():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    model = kernel_ridge_fit(X, y, RBF(1.0), lam=0.5)
    K = exact_kernel_matrix(RBF(1.0), X)
    np.testing.assert_allclose(model.alpha, gaussian_elimination_solve(K + 0.5 * np.eye(30), y), rtol=1e-9)


# --- synthetic data and splits ----------------------------------------------------------


def test_synth_deterministic_and_bounded():
    a = synth_gp_data(100, 3, seed=5)
    b = synth_gp_data(100, 3, seed=5)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    assert np.all((a.X >= 0) & (a.X < 1))
    assert not np.array_equal(a.y, synth_gp_data(100, 3, seed=6).y)
    with pytest.raises(ValueError):
        synth_gp_data(4001, 3)


def test_synth_variance_grows_with_centers():
    few = np.mean([synth_gp_data(2000, 3, noise=0.0, seed=s, n_centers=5).y.var() for s in range(5)])
    many = np.mean([synth_gp_data(2000, 3, noise=0.0, seed=s, n_centers=200).y.var() for s in range(5)])
    assert many > few


def test_noise_free_target_is_recoverable():
    data = synth_gp_data(600, 2, sigma=0.5, noise=0.0, seed=1)
    train, test = train_test_split(data, 0.2, seed=1)
    # the generating bandwidth expressed in standardized units
    spec = RBF(0.5 / float(np.mean(train.feature_stds)))
    rec = fit_evaluate(train, test, "exact", spec=spec, lam=1e-6)
    assert rec["test_rmse"] <= 0.05 * data.y.std()


def test_split_standardizes_with_training_stats():
    data = synth_gp_data(500, 4, seed=2)
    train, test = train_test_split(data, 0.2, seed=3)
    assert train.m == 400 and test.m == 100
    np.testing.assert_allclose(train.X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(train.X.std(axis=0), 1, atol=1e-12)
    assert abs(train.y.mean()) < 1e-12
    np.testing.assert_array_equal(test.feature_means, train.feature_means)
    assert test.target_std == train.target_std
    # the two halves partition the data
    restored = np.vstack([train.X, test.X]) * train.feature_stds + train.feature_means
    ref = data.X[np.lexsort(data.X.T[::-1])]
    got = restored[np.lexsort(restored.T[::-1])]
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_split_rejects_bad_fraction():
    data = synth_gp_data(10, 2)
    with pytest.raises(ValueError):
        train_test_split(data, 1.0)
    with pytest.raises(DataError):
        train_test_split(data.subset([0]), 0.5)


def test_standardize_constant_column():
    data = Dataset(np.column_stack([np.full(5, 3.0), np.arange(5.0)]), np.arange(5.0)).standardize()
    np.testing.assert_array_equal(data.X[:, 0], 0.0)
    assert data.feature_stds[0] == 1.0
    np.testing.assert_allclose(data.destandardize_target(data.y), np.arange(5.0))


def test_dataset_shape_mismatch():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), np.zeros(4))


# --- pipeline ----------------------------------------------------------------------------


@pytest.mark.parametrize("method", ["fastfood", "rks", "rks-hashed", "nystrom", "exact"])
def test_fit_evaluate_methods(method):
    data = synth_gp_data(300, 3, seed=4)
    train, test = train_test_split(data, 0.2, seed=0)
    rec = fit_evaluate(train, test, method, n=64, spec=RBF(1.5), lam=0.1, seed=1)
    assert rec["method"] == method
    assert 0 < rec["test_rmse"] < 3 * data.y.std()
    expected = {"fastfood": 128, "rks": 128, "rks-hashed": 128, "nystrom": 64, "exact": 240}[method]
    assert rec["n_features"] == expected


def test_fit_evaluate_hashed_equals_stored():
    data = synth_gp_data(200, 3, seed=5)
    train, test = train_test_split(data, 0.2, seed=0)
    a = fit_evaluate(train, test, "rks", n=32, lam=0.1)
    b = fit_evaluate(train, test, "rks-hashed", n=32, lam=0.1)
    assert a["test_rmse"] == b["test_rmse"]


def test_fit_evaluate_rejects_unknown():
    data = synth_gp_data(50, 2)
    train, test = train_test_split(data)
    with pytest.raises(ValueError):
        fit_evaluate(train, test, "svm")
