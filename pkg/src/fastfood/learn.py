"""Ridge regression on explicit features, data loading and synthetic data."""

from dataclasses import dataclass, field, replace
import math
import re
from typing import Optional, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .exceptions import DataError, NumericalError
from .kernels import KernelSpec, RBF, exact_kernel_matrix
from .sampling import SeedSpec

__all__ = [
    "Dataset",
    "load_table",
    "read_matrix",
    "write_table",
    "RidgeModel",
    "ridge_fit",
    "predict",
    "rmse",
    "KernelRidgeModel",
    "kernel_ridge_fit",
    "synth_gp_data",
    "train_test_split",
    "DEFAULT_LAMBDA",
    "METHODS",
    "build_feature_map",
    "fit_evaluate",
]

DEFAULT_LAMBDA = 1e-3
_STD_FLOOR = 1e-12


@dataclass
class Dataset:
    """Inputs ``X`` (``m x d``), targets ``y`` and standardization statistics.

    Statistics default to the identity transform until :meth:`standardize`
    or :meth:`apply_standardization` sets them.
    """

    X: np.ndarray
    y: np.ndarray
    feature_means: Optional[np.ndarray] = None
    feature_stds: Optional[np.ndarray] = None
    target_mean: float = 0.0
    target_std: float = 1.0
    columns: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError(f"{self.X.shape[0]} input rows but {self.y.shape[0]} targets")
        if self.feature_means is None:
            self.feature_means = np.zeros(self.d)
        if self.feature_stds is None:
            self.feature_stds = np.ones(self.d)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def standardize(self) -> "Dataset":
        """Zero-mean, unit-variance columns and target, using this set's statistics.

        Constant columns map to zeros and record a std of 1.
        """
        means = self.X.mean(axis=0)
        stds = self.X.std(axis=0)
        constant = np.ptp(self.X, axis=0) == 0
        # use the column's own value so constant columns become exact zeros
        means[constant] = self.X[0, constant]
        stds = np.where((stds > _STD_FLOOR) & ~constant, stds, 1.0)
        ymean = float(self.y.mean())
        ystd = float(self.y.std())
        ystd = ystd if ystd > _STD_FLOOR else 1.0
        return self.apply_standardization(means, stds, ymean, ystd)

    def apply_standardization(self, means, stds, target_mean: float, target_std: float) -> "Dataset":
        """Standardize with externally supplied statistics (e.g. a training split's)."""
        X = (self.X - means) / stds
        return replace(self, X=X, y=(self.y - target_mean) / target_std,
                       feature_means=np.asarray(means, dtype=np.float64),
                       feature_stds=np.asarray(stds, dtype=np.float64),
                       target_mean=float(target_mean), target_std=float(target_std))

    def destandardize_target(self, y):
        return np.asarray(y) * self.target_std + self.target_mean

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], columns=self.columns)


# --- delimited text ---------------------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")


def _fields(line: str) -> list:
    line = line.strip()
    return [tok for tok in _SPLIT.split(line) if tok] if line else []


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_matrix(path):
    """Parse a comma- or whitespace-delimited numeric table.

    A first line containing any non-numeric field is taken as a header.
    Blank lines and lines starting with ``#`` are skipped. Errors name the
    1-based file line and column.

    Returns
    -------
    table : np.ndarray
        ``rows x columns`` float64 matrix.
    header : list of str or None
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = None
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        if raw.lstrip().startswith("#"):
            continue
        toks = _fields(raw)
        if not toks:
            continue
        if header is None and not rows and not all(_is_number(t) for t in toks):
            header = toks
            width = len(toks)
            continue
        if width is None:
            width = len(toks)
        if len(toks) != width:
            raise DataError(f"row {lineno}: expected {width} fields, found {len(toks)}")
        values = []
        for col, tok in enumerate(toks, start=1):
            try:
                values.append(float(tok))
            except ValueError:
                raise DataError(f"row {lineno}, column {col}: non-numeric value {tok!r}") from None
        rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows), header


def load_table(path, target_column: Union[int, str] = -1) -> Dataset:
    """Read a delimited table (see :func:`read_matrix`) and split off the target.

    ``target_column`` is a header name or a (possibly negative) index; the
    remaining columns become ``X``.
    """
    table, header = read_matrix(path)
    width = table.shape[1]
    if isinstance(target_column, str) and not _is_integer(target_column):
        if header is None or target_column not in header:
            raise DataError(f"target column {target_column!r} not found in header")
        target = header.index(target_column)
    else:
        target = int(target_column)
        if not -width <= target < width:
            raise DataError(f"target column {target} out of range for {width} columns")
        target %= width
    if width < 2:
        raise DataError("table needs at least one input column besides the target")
    keep = [c for c in range(width) if c != target]
    names = [header[c] for c in keep] if header else None
    return Dataset(table[:, keep], table[:, target], columns=names)


def _is_integer(text: str) -> bool:
    return re.fullmatch(r"[+-]?\d+", text.strip()) is not None


def write_table(path, X, y=None, header=None, fmt: str = "%.17g", comment: Optional[str] = None):
    """Write rows as comma-separated text; ``%.17g`` round-trips float64 exactly."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if y is not None:
        X = np.column_stack([X, np.asarray(y, dtype=np.float64)])
    with open(path, "w", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in X:
            fh.write(",".join(fmt % v for v in row) + "\n")


# --- ridge regression ---------------------------------------------------------------


@dataclass
class RidgeModel:
    """Primal ridge solution ``w`` for a feature map ``transform``.

    ``transform`` is any object with a ``features(X)`` method, or ``None``
    when the model is applied to precomputed features.
    """

    w: np.ndarray
    lam: float
    transform: object = None

    def predict(self, X=None, features=None) -> np.ndarray:
        if features is None:
            if self.transform is None:
                raise ValueError("model has no feature map; pass features=")
            features = self.transform.features(X)
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != self.w.shape[0]:
            raise ValueError(f"expected {self.w.shape[0]} features, got {features.shape[-1]}")
        return features @ self.w


def ridge_fit(features, y, lam: float = DEFAULT_LAMBDA, transform=None) -> RidgeModel:
    """Solve ``(F^T F + lam I) w = F^T y`` by Cholesky factorization.

    Raises
    ------
    NumericalError
        If the system is not numerically positive definite.
    """
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if F.shape[0] != y.shape[0]:
        raise ValueError(f"{F.shape[0]} feature rows but {y.shape[0]} targets")
    if not lam >= 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    A = F.T @ F
    A[np.diag_indices_from(A)] += lam
    try:
        factor = cho_factor(A, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(
            f"normal equations are not positive definite ({exc}); try a larger lambda"
        ) from exc
    w = cho_solve(factor, F.T @ y)
    return RidgeModel(w, float(lam), transform)


def predict(model, X=None, features=None) -> np.ndarray:
    return model.predict(X, features=features)


def rmse(preds, y) -> float:
    preds = np.asarray(preds, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if preds.shape != y.shape:
        raise ValueError(f"length mismatch: {preds.size} predictions, {y.size} targets")
    return math.sqrt(np.mean((preds - y) ** 2))


@dataclass
class KernelRidgeModel:
    """Dual solution ``alpha`` of ``(K + lam I) alpha = y`` over the training inputs."""

    X: np.ndarray
    alpha: np.ndarray
    spec: KernelSpec
    lam: float
    dim: Optional[int] = None

    def predict(self, X) -> np.ndarray:
        return exact_kernel_matrix(self.spec, X, self.X, self.dim) @ self.alpha


def kernel_ridge_fit(X, y, spec: KernelSpec = RBF(1.0), lam: float = DEFAULT_LAMBDA,
                     dim: Optional[int] = None) -> KernelRidgeModel:
    """Exact kernel ridge regression through the ``m x m`` dual system."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    K = exact_kernel_matrix(spec, X, dim=dim)
    K[np.diag_indices_from(K)] += lam
    try:
        factor = cho_factor(K, lower=True)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"kernel system is not positive definite ({exc}); try a larger lambda") from exc
    return KernelRidgeModel(X, cho_solve(factor, y), spec, float(lam), dim)


# --- synthetic data -----------------------------------------------------------------

SYNTH_MAX_ROWS = 4000


def synth_gp_data(m: int, d: int, sigma: float = 0.5, noise: float = 0.1, seed: int = 0,
                  n_centers: int = 50) -> Dataset:
    """Random RBF expansion on ``[0, 1]^d`` plus Gaussian noise.

    ``y = sum_j alpha_j exp(-|x - c_j|^2 / (2 sigma^2)) + noise * eps`` with
    ``n_centers`` centers uniform on the cube and ``alpha_j ~ N(0, 1)``.
    """
    m, d = int(m), int(d)
    if not 1 <= m <= SYNTH_MAX_ROWS:
        raise ValueError(f"m must be in [1, {SYNTH_MAX_ROWS}], got {m}")
    if d < 1 or n_centers < 1:
        raise ValueError("d and n_centers must be positive")
    rng = SeedSpec(seed, 0).generator()
    centers = rng.random((n_centers, d))
    alpha = rng.standard_normal(n_centers)
    X = rng.random((m, d))
    eps = rng.standard_normal(m)
    y = exact_kernel_matrix(RBF(sigma), X, centers) @ alpha + noise * eps
    return Dataset(X, y)


def train_test_split(data: Dataset, test_fraction: float = 0.2, seed: int = 0):
    """Seeded shuffle split; returns ``(train, test)`` standardized by training statistics."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = SeedSpec(seed, 1).generator()
    order = rng.permutation(data.m)
    n_test = max(1, int(round(test_fraction * data.m)))
    if n_test >= data.m:
        raise DataError("not enough rows for a train/test split")
    train = data.subset(np.sort(order[n_test:])).standardize()
    test = data.subset(np.sort(order[:n_test])).apply_standardization(
        train.feature_means, train.feature_stds, train.target_mean, train.target_std)
    return train, test


# --- end-to-end pipeline --------------------------------------------------------------

METHODS = ("fastfood", "rks", "rks-hashed", "nystrom", "exact")


def build_feature_map(method: str, train_X: np.ndarray, n: int, spec: KernelSpec, seed: int = 0):
    """Feature map for ``method`` fitted to ``train_X`` (only Nystrom looks at the data).

    Nystrom needs ``n`` landmarks out of the training rows; when ``n`` exceeds
    the training set size all rows are used.
    """
    from .baselines import DenseGaussianTransform, nystrom_build
    from .transform import FastfoodTransform

    d = train_X.shape[1]
    if method == "fastfood":
        return FastfoodTransform(d, n, spec, seed)
    if method in ("rks", "rks-hashed"):
        if not isinstance(spec, RBF):
            raise ValueError("Random Kitchen Sinks support the RBF kernel only")
        return DenseGaussianTransform(d, n, spec.sigma, seed, hashed=(method == "rks-hashed"))
    if method == "nystrom":
        return nystrom_build(train_X, min(n, train_X.shape[0]), spec, seed, dim=_kernel_dim(spec, d))
    raise ValueError(f"unknown feature method {method!r}")


def _kernel_dim(spec: KernelSpec, d: int) -> int:
    # Fastfood draws Matern radii in the padded dimension; the exact kernel follows suit
    from .hadamard import next_power_of_two
    return next_power_of_two(d)


def fit_evaluate(train: Dataset, test: Dataset, method: str, n: int = 2048,
                 spec: KernelSpec = RBF(1.0), lam: float = DEFAULT_LAMBDA, seed: int = 0) -> dict:
    """Fit ``method`` on standardized ``train`` and report RMSE in original target units."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if method == "exact":
        model = kernel_ridge_fit(train.X, train.y, spec, lam, dim=_kernel_dim(spec, train.d))
        pred_train = model.predict(train.X)
        pred_test = model.predict(test.X)
        n_features = train.m
    else:
        fmap = build_feature_map(method, train.X, n, spec, seed)
        model = ridge_fit(fmap.features(train.X), train.y, lam, fmap)
        pred_train = model.predict(train.X)
        pred_test = model.predict(test.X)
        n_features = fmap.n_features
    scale = train.target_std
    return {
        "method": method,
        "n_features": int(n_features),
        "train_rmse": rmse(pred_train, train.y) * scale,
        "test_rmse": rmse(pred_test, test.y) * scale,
    }
