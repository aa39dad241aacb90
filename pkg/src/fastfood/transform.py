"""Fastfood structured random projections and their feature maps.

One block implements ``V = S H G Pi H B / (sigma sqrt(d))`` without ever
forming a matrix: three length-``d`` diagonals, one permutation lookup, and
two fast Walsh-Hadamard transforms. Stacking independent blocks gives an
``n x d`` Gauss-like projection.

Scaling convention: ``s_i = r_i / |g|_2`` where ``r_i`` is drawn from the
kernel's radial law. Every row of ``H G Pi H B`` has norm ``|g| sqrt(d)``,
so row ``i`` of ``V`` has norm exactly ``r_i / sigma``.
"""

from dataclasses import dataclass
import json
import math
from typing import Optional, Sequence

import numpy as np

from .hadamard import fwht_inplace, hadamard_matrix, is_power_of_two, next_power_of_two
from .kernels import RBF, Matern, Tabulated, AnchoredGaussian, KernelSpec, anchored_kernel
from .sampling import (
    ChiRBF,
    MaternConv,
    SeedSpec,
    TabulatedDensity,
    gaussian_diag,
    rademacher_diag,
    radial_draws,
    random_permutation,
)

__all__ = [
    "FastfoodBlock",
    "FastfoodTransform",
    "build_block",
    "apply_block",
    "dense_block_matrix",
    "features",
    "kernel_estimate",
    "block_estimates",
    "AnchoredFeatureMap",
    "anchored_features",
    "SERIALIZATION_VERSION",
]

SERIALIZATION_VERSION = 1
_DENSE_MAX = 64
# elements of the (rows, blocks, d) working buffer processed at once
_WORK_ELEMENTS = 1 << 22


@dataclass(frozen=True, eq=False)
class FastfoodBlock:
    """Parameters of one ``d x d`` block.

    Attributes
    ----------
    b : np.ndarray
        Diagonal of ``B``, entries +1/-1.
    perm : np.ndarray
        Permutation lookup: ``(Pi t)[i] = t[perm[i]]``.
    g : np.ndarray
        Diagonal of ``G``, iid standard normal.
    s : np.ndarray
        Diagonal of ``S``.
    sigma : float
        Kernel bandwidth.
    """

    b: np.ndarray
    perm: np.ndarray
    g: np.ndarray
    s: np.ndarray
    sigma: float

    @property
    def d(self) -> int:
        return self.b.shape[0]

    @property
    def nbytes(self) -> int:
        return self.b.nbytes + self.perm.nbytes + self.g.nbytes + self.s.nbytes

    def row_norms(self) -> np.ndarray:
        """Exact row norms of the block's ``V``."""
        return np.abs(self.s) * np.linalg.norm(self.g) / self.sigma


def _radial_law(spec: KernelSpec, d: int):
    if isinstance(spec, RBF):
        return ChiRBF(d)
    if isinstance(spec, Matern):
        return MaternConv(d, spec.t)
    if isinstance(spec, Tabulated):
        return TabulatedDensity(d, spec.r, spec.spectrum)
    raise TypeError(f"Fastfood blocks do not support {type(spec).__name__}")


def _sigma(spec: KernelSpec) -> float:
    return getattr(spec, "sigma", 1.0)


def build_block(d_pad: int, spec: KernelSpec, seed: SeedSpec, scale: bool = True) -> FastfoodBlock:
    """Draw one block's ``B``, ``Pi``, ``G`` and ``S`` from a single stream.

    Draw order is fixed (signs, permutation, Gaussians, radii) so a block is a
    pure function of ``(d_pad, spec, seed)``. With ``scale=False`` the
    diagonal ``S`` is the identity, giving ``V = H G Pi H B / (sigma sqrt(d))``.
    """
    d_pad = int(d_pad)
    if not is_power_of_two(d_pad):
        raise ValueError(f"block size must be a power of two, got {d_pad}")
    rng = seed.generator()
    b = rademacher_diag(d_pad, rng)
    perm = random_permutation(d_pad, rng)
    g = gaussian_diag(d_pad, rng)
    if scale:
        s = radial_draws(_radial_law(spec, d_pad), d_pad, rng) / np.linalg.norm(g)
    else:
        s = np.ones(d_pad)
    return FastfoodBlock(b, perm, g, s, _sigma(spec))


def _check_padded(x: np.ndarray, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != d:
        raise ValueError(f"expected input with last axis {d}, got shape {x.shape}")
    return x


def apply_block(block: FastfoodBlock, x) -> np.ndarray:
    """``V x`` for one block; ``x`` has last axis ``block.d`` (batch allowed)."""
    d = block.d
    t = _check_padded(x, d) * block.b
    fwht_inplace(t)
    t = t[..., block.perm]
    t *= block.g
    fwht_inplace(t)
    t *= block.s / (block.sigma * math.sqrt(d))
    return t


def dense_block_matrix(block: FastfoodBlock, scaled: bool = True) -> np.ndarray:
    """Materialize a block as a dense matrix (oracle use only, ``d <= 64``).

    With ``scaled=False`` returns ``H diag(g) Pi H diag(b)`` without ``S`` or
    the ``1/(sigma sqrt(d))`` prefactor.
    """
    d = block.d
    if d > _DENSE_MAX:
        raise ValueError(f"dense materialization limited to d <= {_DENSE_MAX}")
    H = hadamard_matrix(d)
    P = np.zeros((d, d))
    P[np.arange(d), block.perm] = 1.0
    W = H @ np.diag(block.g) @ P @ H @ np.diag(block.b)
    if not scaled:
        return W
    return np.diag(block.s) @ W / (block.sigma * math.sqrt(d))


class FastfoodTransform:
    """Stack of independent Fastfood blocks realizing an ``n x d`` projection.

    Parameters
    ----------
    input_dim : int
        Length of raw input vectors; padded to ``d_pad``, the next power of two.
    n : int
        Number of projections (feature pairs). When ``n`` is not a multiple
        of ``d_pad``, ``ceil(n / d_pad)`` blocks are drawn and the stacked
        output is truncated to ``n`` rows.
    spec : KernelSpec
        ``RBF``, ``Matern`` or ``Tabulated``. Radial laws are taken in the
        padded dimension ``d_pad``.
    seed : int
        Master seed; block ``j`` uses stream ``SeedSpec(seed, j)``.
    scale : bool
        Draw the radial diagonal ``S`` (default). ``False`` keeps ``S = I``.
    """

    def __init__(self, input_dim: int, n: int, spec: KernelSpec = RBF(1.0),
                 seed: int = 0, scale: bool = True, blocks: Optional[Sequence[FastfoodBlock]] = None):
        self.input_dim = int(input_dim)
        self.n = int(n)
        if self.input_dim < 1 or self.n < 1:
            raise ValueError("input_dim and n must be positive")
        self.d_pad = next_power_of_two(self.input_dim)
        self.spec = spec
        self.seed = int(seed)
        self.scale = bool(scale)
        n_blocks = -(-self.n // self.d_pad)
        if blocks is None:
            blocks = [build_block(self.d_pad, spec, SeedSpec(self.seed, j), scale)
                      for j in range(n_blocks)]
        if len(blocks) != n_blocks or any(blk.d != self.d_pad for blk in blocks):
            raise ValueError("block list does not match n and d_pad")
        self.blocks = tuple(blocks)
        self._B = np.stack([blk.b for blk in self.blocks])
        self._P = np.stack([blk.perm for blk in self.blocks])
        self._G = np.stack([blk.g for blk in self.blocks])
        self._S = np.stack([blk.s for blk in self.blocks]) / (_sigma(spec) * math.sqrt(self.d_pad))
        # permutation of the flattened (block, coordinate) axis, for one gather per batch
        self._flat_perm = (self._P + self.d_pad * np.arange(len(self.blocks))[:, None]).ravel()

    @property
    def sigma(self) -> float:
        return _sigma(self.spec)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_features(self) -> int:
        return 2 * self.n

    @property
    def parameter_bytes(self) -> int:
        """Bytes of stored random parameters (three diagonals and a permutation per block)."""
        return sum(blk.nbytes for blk in self.blocks)

    def _pad(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise ValueError(f"expected inputs of dimension {self.input_dim}, got {X.shape[-1]}")
        return X

    def _project_padded(self, Xp: np.ndarray) -> np.ndarray:
        """Rows of ``Xp`` (``m x d_pad``) -> ``m x n_blocks x d_pad`` projections."""
        T = Xp[:, None, :] * self._B[None, :, :]
        fwht_inplace(T)
        T = np.take(T.reshape(T.shape[0], -1), self._flat_perm, axis=1).reshape(T.shape)
        T *= self._G
        fwht_inplace(T)
        T *= self._S
        return T

    def project(self, X) -> np.ndarray:
        """``V x`` for each row: shape ``(..., n)``."""
        X = self._pad(X)
        lead = X.shape[:-1]
        flat = X.reshape(-1, self.input_dim)
        out = np.empty((flat.shape[0], self.n))
        rows = max(1, _WORK_ELEMENTS // (self.n_blocks * self.d_pad))
        buf = np.zeros((min(rows, flat.shape[0]), self.d_pad))
        for start in range(0, flat.shape[0], rows):
            stop = min(start + rows, flat.shape[0])
            chunk = buf[: stop - start]
            chunk[:, : self.input_dim] = flat[start:stop]
            T = self._project_padded(chunk)
            out[start:stop] = T.reshape(stop - start, -1)[:, : self.n]
        return out.reshape(lead + (self.n,))

    def block_projections(self, X) -> np.ndarray:
        """Projections grouped per block: shape ``(m, n_blocks, d_pad)`` (no truncation)."""
        X = np.atleast_2d(self._pad(X))
        Xp = np.zeros((X.shape[0], self.d_pad))
        Xp[:, : self.input_dim] = X
        return self._project_padded(Xp)

    def features(self, X) -> np.ndarray:
        """Paired cosine/sine features, ``[cos(Vx), sin(Vx)] / sqrt(n)``."""
        Z = self.project(X)
        return np.concatenate([np.cos(Z), np.sin(Z)], axis=-1) / math.sqrt(self.n)

    def row_norms(self, dims: Optional[int] = None) -> np.ndarray:
        """Norms of the ``n`` rows of ``V``.

        With ``dims=None`` the exact closed form ``|s_i| |g| / sigma`` is used.
        With ``dims=k`` the norms of the rows restricted to the first ``k``
        input coordinates are computed by projecting the unit vectors
        ``e_0 .. e_{k-1}``; this costs ``k`` transforms.
        """
        if dims is None:
            return np.concatenate([blk.row_norms() for blk in self.blocks])[: self.n]
        dims = int(dims)
        if not 1 <= dims <= self.input_dim:
            raise ValueError(f"dims must be in [1, {self.input_dim}]")
        total = np.zeros(self.n)
        step = max(1, _WORK_ELEMENTS // (self.n_blocks * self.d_pad))
        for start in range(0, dims, step):
            stop = min(start + step, dims)
            E = np.zeros((stop - start, self.input_dim))
            E[np.arange(stop - start), np.arange(start, stop)] = 1.0
            cols = self.project(E)
            total += np.sum(cols * cols, axis=0)
        return np.sqrt(total)

    def kernel_estimate(self, x, xp) -> np.ndarray:
        """``(1/n) sum_j cos([V (x - x')]_j)``; equals ``features(x) . features(x')``."""
        v = self._pad(x) - self._pad(xp)
        return np.mean(np.cos(self.project(v)), axis=-1)

    # --- serialization -------------------------------------------------------

    def to_dict(self, include_arrays: bool = False) -> dict:
        record = {
            "format": "fastfood-transform",
            "version": SERIALIZATION_VERSION,
            "input_dim": self.input_dim,
            "n": self.n,
            "seed": self.seed,
            "scale": self.scale,
            "spec": spec_to_dict(self.spec),
        }
        if include_arrays:
            record["blocks"] = [
                {"b": blk.b.tolist(), "perm": blk.perm.tolist(),
                 "g": blk.g.tolist(), "s": blk.s.tolist()}
                for blk in self.blocks
            ]
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "FastfoodTransform":
        if record.get("format") != "fastfood-transform":
            raise ValueError("not a fastfood transform record")
        if record.get("version") != SERIALIZATION_VERSION:
            raise ValueError(f"unsupported record version {record.get('version')}")
        spec = spec_from_dict(record["spec"])
        blocks = None
        if "blocks" in record:
            sigma = _sigma(spec)
            blocks = [
                FastfoodBlock(np.asarray(b["b"], dtype=np.float64),
                              np.asarray(b["perm"], dtype=np.int64),
                              np.asarray(b["g"], dtype=np.float64),
                              np.asarray(b["s"], dtype=np.float64), sigma)
                for b in record["blocks"]
            ]
        return cls(record["input_dim"], record["n"], spec, record["seed"],
                   record.get("scale", True), blocks=blocks)

    def to_json(self, include_arrays: bool = False) -> str:
        return json.dumps(self.to_dict(include_arrays))

    @classmethod
    def from_json(cls, text: str) -> "FastfoodTransform":
        return cls.from_dict(json.loads(text))


def spec_to_dict(spec: KernelSpec) -> dict:
    if isinstance(spec, RBF):
        return {"kind": "rbf", "sigma": spec.sigma}
    if isinstance(spec, Matern):
        return {"kind": "matern", "sigma": spec.sigma, "t": spec.t}
    if isinstance(spec, Tabulated):
        return {"kind": "tabulated", "sigma": spec.sigma,
                "r": np.asarray(spec.r).tolist(), "spectrum": np.asarray(spec.spectrum).tolist()}
    if isinstance(spec, AnchoredGaussian):
        return {"kind": "anchored", "a": spec.a, "b": spec.b}
    raise TypeError(f"cannot serialize {type(spec).__name__}")


def spec_from_dict(record: dict) -> KernelSpec:
    kind = record.get("kind")
    if kind == "rbf":
        return RBF(record["sigma"])
    if kind == "matern":
        return Matern(record["sigma"], record["t"])
    if kind == "tabulated":
        return Tabulated(record["sigma"], np.asarray(record["r"]), np.asarray(record["spectrum"]))
    if kind == "anchored":
        return AnchoredGaussian(record["a"], record["b"])
    raise ValueError(f"unknown kernel kind {kind!r}")


def features(tf: FastfoodTransform, x) -> np.ndarray:
    return tf.features(x)


def kernel_estimate(tf: FastfoodTransform, x, xp):
    return tf.kernel_estimate(x, xp)


def block_estimates(tf: FastfoodTransform, v) -> np.ndarray:
    """Per-block kernel estimates ``mean_j cos([V_k v]_j)`` for each block ``k``.

    Returns shape ``(m, n_blocks)`` for ``m`` difference vectors ``v``.
    """
    return np.mean(np.cos(tf.block_projections(v)), axis=2)


class AnchoredFeatureMap:
    """Features ``n^{-1/2} exp(-(a/2) |x - z_i|^2)`` at Fastfood-drawn anchors.

    Anchors are the rows of a unit-bandwidth RBF Fastfood projection,
    restricted to the input coordinates and scaled by ``1/sqrt(b)``; each is
    distributed as ``N(0, I/b)``. Only ``<x, z_i>`` (one projection) and the
    precomputed anchor norms are needed per input.
    """

    def __init__(self, input_dim: int, n: int, a: float, b: float, seed: int = 0):
        self.spec = AnchoredGaussian(a, b)
        self.transform = FastfoodTransform(input_dim, n, RBF(1.0), seed)
        restrict = None if self.transform.d_pad == input_dim else input_dim
        self.anchor_sqnorms = self.transform.row_norms(restrict) ** 2 / self.spec.b
        self.input_dim = self.transform.input_dim
        self.n = self.transform.n

    @property
    def n_features(self) -> int:
        return self.n

    def features(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        a = self.spec.a
        dots = self.transform.project(X) / math.sqrt(self.spec.b)
        sq = np.sum(X * X, axis=-1)[..., None]
        return np.exp(-0.5 * a * (sq - 2.0 * dots + self.anchor_sqnorms)) / math.sqrt(self.n)

    def kernel_estimate(self, x, xp):
        return np.sum(self.features(x) * self.features(xp), axis=-1)

    def closed_form(self, x, xp):
        return anchored_kernel(x, xp, self.spec.a, self.spec.b)


def anchored_features(x, n: int, a: float, b: float, seed: int = 0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return AnchoredFeatureMap(x.shape[-1], n, a, b, seed).features(x)
