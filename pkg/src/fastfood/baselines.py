"""Dense baselines: Random Kitchen Sinks and Nystrom feature maps.

Random Kitchen Sinks use a dense ``n x d`` Gaussian projection, either stored
or regenerated on the fly from a counter hash. Nystrom whitens exact kernel
evaluations against a random landmark subset.
"""

import json
import math
from typing import Optional

import numpy as np

from .exceptions import NumericalError
from .kernels import KernelSpec, RBF, exact_kernel_matrix
from .sampling import SeedSpec, hashed_gaussian
from .transform import spec_from_dict, spec_to_dict

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

__all__ = [
    "DenseGaussianTransform",
    "rks_features",
    "jacobi_eigh",
    "NystromMap",
    "nystrom_build",
    "nystrom_features",
    "EIG_FLOOR",
]

SERIALIZATION_VERSION = 1
# elements of Z generated or read per matmul
_CHUNK_ELEMENTS = 1 << 22


class DenseGaussianTransform:
    """Random Kitchen Sinks projection ``Z x / sigma`` with ``Z_ij ~ N(0, 1)``.

    Entries are ``hashed_gaussian(i, j, seed)``. In stored mode the matrix is
    materialized once; in hashed mode each row block is regenerated when
    needed, so only the seed is kept. Both modes run the same row-chunked
    products, so their outputs agree bit for bit.

    Parameters
    ----------
    input_dim, n : int
        Input dimension ``d`` and number of projections.
    sigma : float
        RBF bandwidth.
    seed : int
        Hash key.
    hashed : bool
        Regenerate ``Z`` instead of storing it.
    """

    def __init__(self, input_dim: int, n: int, sigma: float = 1.0, seed: int = 0,
                 hashed: bool = False):
        self.input_dim = int(input_dim)
        self.n = int(n)
        if self.input_dim < 1 or self.n < 1:
            raise ValueError("input_dim and n must be positive")
        self.spec = RBF(sigma)
        self.sigma = self.spec.sigma
        self.seed = int(seed)
        self.hashed = bool(hashed)
        self.chunk_rows = max(1, _CHUNK_ELEMENTS // self.input_dim)
        self.Z = None
        if not self.hashed:
            self.Z = np.empty((self.n, self.input_dim))
            for start in range(0, self.n, self.chunk_rows):
                stop = min(start + self.chunk_rows, self.n)
                self.Z[start:stop] = self._generate(start, stop)

    def _generate(self, start: int, stop: int) -> np.ndarray:
        rows = np.arange(start, stop, dtype=np.uint64)[:, None]
        cols = np.arange(self.input_dim, dtype=np.uint64)[None, :]
        return hashed_gaussian(rows, cols, self.seed)

    def _rows(self, start: int, stop: int) -> np.ndarray:
        if self.hashed:
            return self._generate(start, stop)
        return self.Z[start:stop]

    @property
    def n_features(self) -> int:
        return 2 * self.n

    @property
    def parameter_bytes(self) -> int:
        """Bytes of stored random parameters (the seed alone in hashed mode)."""
        return 8 if self.hashed else self.Z.nbytes

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise ValueError(f"expected inputs of dimension {self.input_dim}, got {X.shape[-1]}")
        lead = X.shape[:-1]
        flat = X.reshape(-1, self.input_dim)
        out = np.empty((flat.shape[0], self.n))
        for start in range(0, self.n, self.chunk_rows):
            stop = min(start + self.chunk_rows, self.n)
            out[:, start:stop] = flat @ self._rows(start, stop).T
        out /= self.sigma
        return out.reshape(lead + (self.n,))

    def features(self, X) -> np.ndarray:
        """``[cos(Zx/sigma), sin(Zx/sigma)] / sqrt(n)``, same layout as Fastfood."""
        P = self.project(X)
        return np.concatenate([np.cos(P), np.sin(P)], axis=-1) / math.sqrt(self.n)

    def kernel_estimate(self, x, xp) -> np.ndarray:
        v = np.asarray(x, dtype=np.float64) - np.asarray(xp, dtype=np.float64)
        return np.mean(np.cos(self.project(v)), axis=-1)

    def to_dict(self, include_arrays: bool = False) -> dict:
        record = {
            "format": "rks-transform",
            "version": SERIALIZATION_VERSION,
            "input_dim": self.input_dim,
            "n": self.n,
            "sigma": self.sigma,
            "seed": self.seed,
            "hashed": self.hashed,
        }
        if include_arrays and not self.hashed:
            record["Z"] = self.Z.tolist()
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "DenseGaussianTransform":
        if record.get("format") != "rks-transform":
            raise ValueError("not an rks transform record")
        if record.get("version") != SERIALIZATION_VERSION:
            raise ValueError(f"unsupported record version {record.get('version')}")
        # entries are a pure function of the seed; inlined arrays are a cache only
        return cls(record["input_dim"], record["n"], record["sigma"], record["seed"],
                   record.get("hashed", False))

    def to_json(self, include_arrays: bool = False) -> str:
        return json.dumps(self.to_dict(include_arrays))

    @classmethod
    def from_json(cls, text: str) -> "DenseGaussianTransform":
        return cls.from_dict(json.loads(text))


def rks_features(tf: DenseGaussianTransform, x) -> np.ndarray:
    return tf.features(x)


# --- symmetric eigensolver ---------------------------------------------------

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# above this size the O(n^3)-per-sweep Jacobi loop hands over to LAPACK
JACOBI_AUTO_MAX = 256


def _jacobi_sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += A[i, j] * A[i, j]
    scale = math.sqrt(scale)
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += A[i, j] * A[i, j]
        if math.sqrt(2.0 * off) <= tol * scale:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return -1


if njit is not None:
    _jacobi_sweeps = njit(cache=True)(_jacobi_sweeps)


def jacobi_eigh(A, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps over all ``(p, q)`` pairs until the off-diagonal Frobenius norm is
    at most ``tol`` times the norm of ``A``.

    Returns
    -------
    w : np.ndarray
        Eigenvalues in ascending order.
    V : np.ndarray
        Orthonormal eigenvectors as columns.
    """
    A = np.array(A, dtype=np.float64, order="C", copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("jacobi_eigh needs a square matrix")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise ValueError("jacobi_eigh needs a symmetric matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(A.shape[0])
    if A.shape[0] > 1 and _jacobi_sweeps(A, V, tol, max_sweeps) < 0:
        raise NumericalError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def symmetric_eigh(A, solver: str = "auto"):
    """Dispatch to :func:`jacobi_eigh` or LAPACK by size (``solver`` = auto/jacobi/lapack)."""
    if solver == "auto":
        solver = "jacobi" if np.shape(A)[0] <= JACOBI_AUTO_MAX else "lapack"
    if solver == "jacobi":
        return jacobi_eigh(A)
    if solver == "lapack":
        try:
            return np.linalg.eigh(np.asarray(A, dtype=np.float64))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    raise ValueError(f"unknown eigensolver {solver!r}")


# --- Nystrom ------------------------------------------------------------------

EIG_FLOOR = 1e-10
PSD_TOL = 1e-8


class NystromMap:
    """Features ``W [k(z_1, x), ..., k(z_n, x)]`` with ``W = K_nn^{-1/2}``.

    Eigenvalues of ``K_nn`` below ``EIG_FLOOR`` are dropped, so ``W K_nn W``
    is the projector onto the retained eigenspace.
    """

    def __init__(self, landmarks: np.ndarray, W: np.ndarray, spec: KernelSpec,
                 dim: Optional[int] = None, rank: Optional[int] = None):
        self.landmarks = np.asarray(landmarks, dtype=np.float64)
        self.W = np.asarray(W, dtype=np.float64)
        self.spec = spec
        self.dim = dim
        self.rank = int(self.W.shape[0] if rank is None else rank)

    @property
    def n(self) -> int:
        return self.landmarks.shape[0]

    @property
    def input_dim(self) -> int:
        return self.landmarks.shape[1]

    @property
    def n_features(self) -> int:
        return self.n

    def features(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise ValueError(f"expected inputs of dimension {self.input_dim}, got {X.shape[-1]}")
        lead = X.shape[:-1]
        K = exact_kernel_matrix(self.spec, X.reshape(-1, self.input_dim), self.landmarks, self.dim)
        return (K @ self.W).reshape(lead + (self.n,))

    def kernel_estimate(self, x, xp):
        return np.sum(self.features(x) * self.features(xp), axis=-1)

    def to_dict(self) -> dict:
        return {
            "format": "nystrom-map",
            "version": SERIALIZATION_VERSION,
            "spec": spec_to_dict(self.spec),
            "dim": self.dim,
            "rank": self.rank,
            "landmarks": self.landmarks.tolist(),
            "W": self.W.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "NystromMap":
        if record.get("format") != "nystrom-map":
            raise ValueError("not a Nystrom record")
        if record.get("version") != SERIALIZATION_VERSION:
            raise ValueError(f"unsupported record version {record.get('version')}")
        return cls(np.asarray(record["landmarks"]), np.asarray(record["W"]),
                   spec_from_dict(record["spec"]), record.get("dim"), record.get("rank"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "NystromMap":
        return cls.from_dict(json.loads(text))


def whitening_matrix(K: np.ndarray, solver: str = "auto"):
    """``K^{-1/2}`` on the eigenspace with eigenvalues above ``EIG_FLOOR``.

    Returns ``(W, rank)``. Raises :class:`NumericalError` when an eigenvalue
    is below ``-PSD_TOL`` (relative to the largest eigenvalue).
    """
    w, U = symmetric_eigh(K, solver)
    top = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if w.size and w[0] < -PSD_TOL * top:
        raise NumericalError(f"kernel matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    keep = w > EIG_FLOOR
    Uk = U[:, keep]
    W = (Uk / np.sqrt(w[keep])) @ Uk.T
    return 0.5 * (W + W.T), int(keep.sum())


def nystrom_build(data, n: int, spec: KernelSpec = RBF(1.0), seed: int = 0,
                  solver: str = "auto", dim: Optional[int] = None) -> NystromMap:
    """Sample ``n`` landmarks uniformly without replacement and whiten ``K_nn``.

    ``dim`` is forwarded to the exact kernel (the Matern order uses it).
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    m = data.shape[0]
    n = int(n)
    if not 1 <= n <= m:
        raise ValueError(f"landmark count must be in [1, {m}], got {n}")
    rng = SeedSpec(seed, 0).generator()
    idx = np.sort(rng.choice(m, size=n, replace=False))
    landmarks = data[idx]
    K = exact_kernel_matrix(spec, landmarks, dim=dim)
    W, rank = whitening_matrix(K, solver)
    return NystromMap(landmarks, W, spec, dim, rank)


def nystrom_features(nmap: NystromMap, x) -> np.ndarray:
    return nmap.features(x)
