import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from fastfood.baselines import (
    EIG_FLOOR,
    DenseGaussianTransform,
    NystromMap,
    jacobi_eigh,
    nystrom_build,
    nystrom_features,
    rks_features,
    symmetric_eigh,
    whitening_matrix,
)
from fastfood.exceptions import NumericalError
from fastfood.kernels import RBF, Matern, exact_kernel_matrix, rbf_kernel
from fastfood.sampling import hashed_gaussian


# --- dense Gaussian (RKS) -----------------------------------------------------------


def test_rks_entries_are_hashed_gaussians():
    tf = DenseGaussianTransform(3, 5, sigma=1.0, seed=4)
    i = np.arange(5, dtype=np.uint64)[:, None]
    j = np.arange(3, dtype=np.uint64)[None, :]
    np.testing.assert_array_equal(tf.Z, hashed_gaussian(i, j, 4))


def test_rks_project_matches_matrix_product():
    tf = DenseGaussianTransform(6, 40, sigma=2.0, seed=1)
    X = np.random.default_rng(0).standard_normal((5, 6))
    np.testing.assert_allclose(tf.project(X), X @ tf.Z.T / 2.0, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("d, n", [(3, 7), (16, 300_000), (1000, 5000)])
def test_hashed_mode_bit_identical(d, n):
    if d * n > 5e6:
        n = int(5e6 // d)
    stored = DenseGaussianTransform(d, n, 1.3, seed=9)
    hashed = DenseGaussianTransform(d, n, 1.3, seed=9, hashed=True)
    X = np.random.default_rng(d).standard_normal((2, d))
    np.testing.assert_array_equal(stored.project(X), hashed.project(X))
    assert hashed.parameter_bytes == 8
    assert stored.parameter_bytes == 8 * n * d


def test_rks_features_layout_and_norm():
    tf = DenseGaussianTransform(4, 64, seed=2)
    x = np.random.default_rng(1).standard_normal(4)
    phi = rks_features(tf, x)
    assert phi.shape == (128,)
    assert phi @ phi == pytest.approx(1.0, abs=1e-12)
    P = tf.project(x)
    np.testing.assert_allclose(phi[:64], np.cos(P) / 8.0)
    np.testing.assert_allclose(phi[64:], np.sin(P) / 8.0)


def test_rks_kernel_estimate_converges():
    tf = DenseGaussianTransform(5, 200_000, sigma=1.0, seed=3)
    x, xp = np.random.default_rng(3).random((2, 5))
    assert tf.kernel_estimate(x, xp) == pytest.approx(float(rbf_kernel(x, xp, 1.0)), abs=0.01)


def test_rks_validation_and_serialization():
    with pytest.raises(ValueError):
        DenseGaussianTransform(0, 4)
    tf = DenseGaussianTransform(3, 8, 0.7, seed=5)
    with pytest.raises(ValueError):
        tf.project(np.zeros(4))
    for arrays in (False, True):
        back = DenseGaussianTransform.from_json(tf.to_json(include_arrays=arrays))
        np.testing.assert_array_equal(back.project(np.ones(3)), tf.project(np.ones(3)))
    with pytest.raises(ValueError):
        DenseGaussianTransform.from_dict({"format": "rks-transform", "version": 0})


# --- eigensolver ----------------------------------------------------------------------


def _random_symmetric(n, seed):
    A = np.random.default_rng(seed).standard_normal((n, n))
    return A + A.T


@pytest.mark.parametrize("n", [1, 2, 5, 20, 60])
def test_jacobi_matches_lapack(n):
    A = _random_symmetric(n, n)
    w, V = jacobi_eigh(A)
    np.testing.assert_allclose(w, linalg.eigh(A, eigvals_only=True), atol=1e-10 * max(1, np.abs(w).max()))
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, A, atol=1e-11 * np.abs(A).max())


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2 ** 32 - 1))
def test_jacobi_reconstruction_property(n, seed):
    A = _random_symmetric(n, seed)
    w, V = jacobi_eigh(A)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, A, atol=1e-10 * max(1.0, np.abs(A).max()))


def test_jacobi_diagonal_and_degenerate():
    w, V = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(w, [1.0, 2.0, 3.0])
    w, V = jacobi_eigh(np.full((4, 4), 1.0))
    np.testing.assert_allclose(w, [0, 0, 0, 4], atol=1e-12)


def test_jacobi_rejects_bad_input():
    with pytest.raises(ValueError):
        jacobi_eigh(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_jacobi_reports_nonconvergence():
    with pytest.raises(NumericalError):
        jacobi_eigh(_random_symmetric(30, 0), max_sweeps=1)


def test_symmetric_eigh_dispatch():
    A = _random_symmetric(10, 4)
    for solver in ("auto", "jacobi", "lapack"):
        w, _ = symmetric_eigh(A, solver)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-10)
    with pytest.raises(ValueError):
        symmetric_eigh(A, "qr")


# --- Nystrom --------------------------------------------------------------------------


def test_whitening_identity():
    W, rank = whitening_matrix(np.eye(6))
    np.testing.assert_allclose(W, np.eye(6), atol=1e-14)
    assert rank == 6


def test_whitening_projector_identity():
    X = np.random.default_rng(0).random((50, 3))
    K = exact_kernel_matrix(RBF(1.0), X)
    W, rank = whitening_matrix(K)
    w, U = np.linalg.eigh(K)
    Uk = U[:, w > EIG_FLOOR]
    np.testing.assert_allclose(W @ K @ W, Uk @ Uk.T, atol=1e-6)
    assert rank == Uk.shape[1]


def test_whitening_full_rank_inverse_sqrt():
    X = np.random.default_rng(1).standard_normal((20, 4)) * 3
    K = exact_kernel_matrix(RBF(1.0), X)
    W, rank = whitening_matrix(K, "jacobi")
    assert rank == 20
    np.testing.assert_allclose(W @ W, np.linalg.inv(K), rtol=1e-8, atol=1e-8)


def test_whitening_rejects_indefinite():
    with pytest.raises(NumericalError):
        whitening_matrix(np.diag([1.0, -0.5]))


def test_nystrom_exact_when_all_points_are_landmarks():
    X = np.random.default_rng(2).standard_normal((40, 3)) * 2
    nmap = nystrom_build(X, 40, RBF(1.0), seed=0)
    F = nystrom_features(nmap, X)
    np.testing.assert_allclose(F @ F.T, exact_kernel_matrix(RBF(1.0), X), atol=1e-9)


def test_nystrom_landmarks_are_data_rows():
    X = np.random.default_rng(3).random((30, 2))
    nmap = nystrom_build(X, 10, seed=5)
    assert nmap.n == 10 and nmap.n_features == 10
    rows = {tuple(r) for r in X}
    assert all(tuple(z) in rows for z in nmap.landmarks)
    assert len({tuple(z) for z in nmap.landmarks}) == 10
    again = nystrom_build(X, 10, seed=5)
    np.testing.assert_array_equal(again.landmarks, nmap.landmarks)


def test_nystrom_landmark_count_checked():
    X = np.zeros((5, 2))
    with pytest.raises(ValueError):
        nystrom_build(X, 6)
    with pytest.raises(ValueError):
        nystrom_build(X, 0)


def test_nystrom_duplicate_rows_rank_deficient():
    X = np.repeat(np.random.default_rng(4).random((5, 2)), 4, axis=0)
    nmap = nystrom_build(X, 20, seed=0)
    assert nmap.rank == 5
    F = nmap.features(X)
    np.testing.assert_allclose(F @ F.T, exact_kernel_matrix(RBF(1.0), X), atol=1e-7)


def test_nystrom_error_decreases_with_landmarks():
    rng = np.random.default_rng(5)
    X = rng.random((2000, 5))
    pairs = rng.integers(0, 2000, size=(300, 2))
    exact = rbf_kernel(X[pairs[:, 0]], X[pairs[:, 1]], 0.5)
    errs = []
    for n in (64, 256, 1024):
        nmap = nystrom_build(X, n, RBF(0.5), seed=1)
        est = nmap.kernel_estimate(X[pairs[:, 0]], X[pairs[:, 1]])
        errs.append(np.mean(np.abs(est - exact)))
    assert errs[0] > errs[1] > errs[2]


def test_nystrom_matern_and_serialization():
    X = np.random.default_rng(6).random((25, 2))
    nmap = nystrom_build(X, 12, Matern(1.0, 2), seed=2, dim=2)
    back = NystromMap.from_json(nmap.to_json())
    np.testing.assert_array_equal(back.features(X), nmap.features(X))
    with pytest.raises(ValueError):
        NystromMap.from_dict({"format": "x"})
    with pytest.raises(ValueError):
        nmap.features(np.zeros(3))


def test_nystrom_feature_inner_product_bounded_by_kernel():
    # the Nystrom estimate of k(x, x) never exceeds k(x, x) = 1
    X = np.random.default_rng(7).random((100, 3))
    nmap = nystrom_build(X, 20, seed=0)
    F = nmap.features(np.random.default_rng(8).random((50, 3)))
    assert np.all(np.sum(F * F, axis=1) <= 1.0 + 1e-8)
    assert math.isclose(float(np.sum(nmap.features(nmap.landmarks[0]) ** 2)), 1.0, rel_tol=1e-7)
