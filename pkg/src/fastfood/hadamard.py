"""Fast Walsh-Hadamard transform.

Unnormalized convention throughout: ``H`` has +/-1 entries, so
``H @ H == d * I``. Callers apply any ``1/sqrt(d)`` factors themselves.
"""

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

__all__ = [
    "PaddedVector",
    "is_power_of_two",
    "next_power_of_two",
    "pad_to_pow2",
    "fwht_inplace",
    "fwht",
    "naive_hadamard",
    "hadamard_matrix",
]

_NAIVE_MAX = 4096


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise ValueError(f"length must be positive, got {n}")
    return 1 << (n - 1).bit_length()


@dataclass
class PaddedVector:
    """A zero-padded vector whose length is a power of two.

    Attributes
    ----------
    values : np.ndarray
        Array of shape ``(..., d_pad)``; the last axis is the padded one.
    original_len : int
        Length of the last axis before padding.
    """

    values: np.ndarray
    original_len: int

    @property
    def d_pad(self) -> int:
        return self.values.shape[-1]


def pad_to_pow2(x) -> PaddedVector:
    """Zero-pad the last axis of ``x`` to the next power of two.

    Works on a single vector or a batch of row vectors. The input is always
    copied into a fresh float64 buffer, so the result can be transformed in
    place without touching the caller's data.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("cannot pad an empty vector")
    d = x.shape[-1]
    d_pad = next_power_of_two(d)
    out = np.zeros(x.shape[:-1] + (d_pad,), dtype=np.float64)
    out[..., :d] = x
    return PaddedVector(out, d)


def _check_length(d: int) -> None:
    if not is_power_of_two(d):
        raise ValueError(f"Hadamard length must be a power of two, got {d}")


def _butterfly_numpy(flat: np.ndarray) -> None:
    d = flat.shape[1]
    h = 1
    while h < d:
        v = flat.reshape(flat.shape[0], d // (2 * h), 2, h)
        top = v[:, :, 0, :]
        bottom = v[:, :, 1, :]
        # (a, b) -> (a + b, a - b) without a scratch buffer
        top += bottom
        bottom *= -2.0
        bottom += top
        h *= 2


if njit is not None:
    @njit(cache=True, nogil=True)
    def _butterfly(flat):
        m, d = flat.shape
        for r in range(m):
            h = 1
            while h < d:
                for i in range(0, d, 2 * h):
                    for j in range(i, i + h):
                        u = flat[r, j]
                        v = flat[r, j + h]
                        flat[r, j] = u + v
                        flat[r, j + h] = u - v
                h *= 2
else:  # pragma: no cover
    _butterfly = _butterfly_numpy


def fwht_inplace(x):
    """Multiply by ``H_d`` in place along the last axis.

    Iterative radix-2 butterfly over each row, ``O(d log d)`` per vector and
    no scratch buffer.

    Parameters
    ----------
    x : np.ndarray or PaddedVector
        C-contiguous float64 array of shape ``(..., d)`` with ``d`` a power
        of two. Leading axes are treated as a batch.

    Returns
    -------
    The same object, transformed.
    """
    arr = x.values if isinstance(x, PaddedVector) else x
    if not isinstance(arr, np.ndarray) or arr.dtype != np.float64:
        raise TypeError("fwht_inplace needs a float64 ndarray")
    if arr.ndim == 0:
        raise ValueError("fwht_inplace needs at least one axis")
    if not arr.flags.c_contiguous:
        raise ValueError("fwht_inplace needs a C-contiguous buffer")
    d = arr.shape[-1]
    _check_length(d)
    if arr.size:
        _butterfly(arr.reshape(-1, d))
    return x


def fwht(x) -> np.ndarray:
    """Out-of-place Walsh-Hadamard transform along the last axis."""
    out = np.array(x, dtype=np.float64, order="C", copy=True)
    return fwht_inplace(out)


def hadamard_matrix(d: int) -> np.ndarray:
    """Dense Sylvester Hadamard matrix built by ``H_2d = [[H, H], [H, -H]]``."""
    _check_length(d)
    if d > _NAIVE_MAX:
        raise ValueError(f"dense Hadamard oracle limited to d <= {_NAIVE_MAX}")
    H = np.ones((1, 1))
    while H.shape[0] < d:
        H = np.block([[H, H], [H, -H]])
    return H


def naive_hadamard(x) -> np.ndarray:
    """Dense ``O(d^2)`` reference product ``H_d @ x`` (test oracle)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("naive_hadamard needs a nonempty vector")
    H = hadamard_matrix(x.shape[-1])
    return x @ H.T
