"""Double-precision kernel for signals on circular grids.

Everything downstream reduces to a handful of operations defined here:
circular shifts, circular convolution, row-wise softmax, lp norms, and a
deterministic argmax.  All functions are pure; arrays held by the wrapper
types are frozen so results can be shared without defensive copies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError

# Per-axis integer offsets for circular shifts.
Offset = tuple[int, ...]


def freeze(values, dtype=np.float64) -> np.ndarray:
    """Copy `values` into a read-only float64 array."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must contain only finite entries")


def as_offset(off, rank: int) -> Offset:
    """Normalize an offset into a tuple with one integer per grid axis.

    A bare int is accepted for rank-1 grids only; higher ranks must spell
    out every axis.
    """
    if isinstance(off, (int, np.integer)):
        if rank != 1:
            raise ShapeError(f"scalar offset given for a rank-{rank} grid")
        return (int(off),)
    offs = tuple(int(o) for o in off)
    if len(offs) != rank:
        raise ShapeError(f"offset has {len(offs)} axes, grid has {rank}")
    return offs


@dataclass(frozen=True)
class GridSignal:
    """A rank-1 or rank-2 multi-channel signal with circular indexing.

    `data` has shape (*grid, channels) in row-major order.  Rank-1 signals
    of length N with C channels are (N, C); rank-2 are (H, W, C).
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim not in (2, 3):
            raise ShapeError(
                f"expected (*grid, channels) with grid rank 1 or 2, got ndim={arr.ndim}"
            )
        if min(arr.shape) < 1:
            raise ShapeError("every axis must have length >= 1")
        object.__setattr__(self, "data", freeze(arr))

    @classmethod
    def from_values(cls, values) -> GridSignal:
        """Wrap a plain rank-1 or rank-2 array as a single-channel signal."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim not in (1, 2):
            raise ShapeError(f"expected a rank-1 or rank-2 array, got ndim={arr.ndim}")
        return cls(arr[..., np.newaxis])

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape[:-1]

    @property
    def rank(self) -> int:
        return self.data.ndim - 1

    @property
    def channels(self) -> int:
        return self.data.shape[-1]


def circular_shift(signal: GridSignal, off) -> GridSignal:
    """Rotate grid indices: out[n] = signal[(n + off) mod shape], per axis."""
    offs = as_offset(off, signal.rank)
    rolled = np.roll(signal.data, shift=[-o for o in offs], axis=tuple(range(signal.rank)))
    return GridSignal(rolled)


def circular_conv(signal: GridSignal, kernel) -> GridSignal:
    """Circular correlation of a rank-1 single-channel signal with a kernel.

    out[n] = sum_l signal[(n + l) mod N] * kernel[l], so the kernel slides
    forward from each output index and wraps around the end.
    """
    if signal.rank != 1 or signal.channels != 1:
        raise ShapeError("circular_conv expects a rank-1 signal with one channel")
    taps = np.asarray(kernel, dtype=np.float64)
    if taps.ndim != 1:
        raise ShapeError(f"kernel must be rank 1, got ndim={taps.ndim}")
    n, p = signal.shape[0], taps.shape[0]
    if not 1 <= p <= n:
        raise ShapeError(f"kernel length {p} must be in [1, {n}]")
    x = signal.data[:, 0]
    out = np.zeros(n)
    # Fixed tap order keeps the accumulation identical for shifted inputs.
    for l in range(p):
        out += taps[l] * np.roll(x, -l)
    return GridSignal(out[:, np.newaxis])


def softmax_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"softmax_rows expects a matrix, got ndim={m.ndim}")
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def lp_norm(values, p: float) -> float:
    """lp norm (sum_i |v_i|^p)^(1/p) over all entries of `values`.

    Magnitudes are sorted before accumulation, so the result is bit-identical
    for any permutation of the input.  Adaptive selections compare these
    norms across rotated views and rely on that exactness.
    """
    if p < 1:
        raise ParameterError(f"lp_norm requires p >= 1, got {p}")
    mags = np.sort(np.abs(np.asarray(values, dtype=np.float64)), axis=None)
    if mags.size == 0:
        raise ShapeError("lp_norm of an empty array")
    total = float(np.sum(mags**p))
    return total ** (1.0 / p)


def project_rows(rows: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Row-wise projection rows @ matrix with a fixed contraction order.

    Plain einsum reduces every output element over k in the same order no
    matter where the row sits, so permuting rows of the input permutes rows
    of the output bit-for-bit.  BLAS matmul does not guarantee that (edge
    rows can take a different microkernel), and the adaptive ops compare
    projected rows across rotated views exactly.
    """
    r = np.asarray(rows, dtype=np.float64)
    m = np.asarray(matrix, dtype=np.float64)
    if r.ndim != 2 or m.ndim != 2:
        raise ShapeError("project_rows expects two matrices")
    if r.shape[1] != m.shape[0]:
        raise ShapeError(f"cannot project rows of width {r.shape[1]} with a {m.shape} matrix")
    return np.einsum("mk,kd->md", r, m)


def argmax_tiebreak(scores) -> int:
    """Index of the maximum entry; exact ties resolve to the lowest index."""
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ParameterError("argmax of an empty score list")
    return int(np.argmax(arr))


def argmax_with_tie(scores) -> tuple[int, bool]:
    """argmax_tiebreak plus a flag for exact ties among distinct entries."""
    arr = np.asarray(scores, dtype=np.float64).ravel()
    idx = argmax_tiebreak(arr)
    tied = int(np.count_nonzero(arr == arr[idx])) > 1
    return idx, tied
