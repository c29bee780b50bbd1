"""Single-head self-attention, relative position bias, window attention.

Two bias families are supported.  The conventional table indexes signed
relative distance and breaks under circular rotation of the tokens; the
circular table indexes distance mod M, is circulant, and commutes with
rotation.  Window attention runs independent self-attention per
non-overlapping block; the adaptive variant first rotates the token grid to
the window anchor with the highest pooled token energy so that blocks cover
the same tokens regardless of how the input was shifted.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ParameterError, ShapeError
from .numerics import argmax_with_tie, freeze, require_finite, softmax_rows
from .tokenizer import TokenMatrix
from .trace import WSA, SelectionTrace

NONE = "none"
ORIGINAL = "original"
ADAPTIVE = "adaptive"


def _stable_sum(values: np.ndarray) -> float:
    return float(np.sum(np.sort(values, axis=None)))


# Window scoring functionals; each is exactly invariant to any permutation
# of the candidate energies so scores transfer bit-for-bit across shifts.
WINDOW_FNS = {
    "max": lambda v: float(np.max(v)),
    "sum": _stable_sum,
    "l2": lambda v: float(np.sqrt(np.sum(np.sort(np.square(v), axis=None)))),
}


@dataclass(frozen=True)
class AttentionParams:
    """Query/key/value projections, all D x D', plus the derived scale."""

    e_q: np.ndarray
    e_k: np.ndarray
    e_v: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("e_q", "e_k", "e_v"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise ShapeError(f"{name} must be a matrix")
            require_finite(arr, name)
            mats[name] = freeze(arr)
        if not (mats["e_q"].shape == mats["e_k"].shape == mats["e_v"].shape):
            raise ShapeError("projection matrices must share one D x D' shape")
        for name, arr in mats.items():
            object.__setattr__(self, name, arr)

    @property
    def dim_in(self) -> int:
        return self.e_q.shape[0]

    @property
    def dim_out(self) -> int:
        return self.e_q.shape[1]

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.e_q.shape[1])


@dataclass(frozen=True)
class RpeTable:
    """Relative position bias table.

    kind "none" carries no table.  For a token grid of shape G the table is
    G-shaped for the circular kind and (2G - 1)-shaped per axis for the
    conventional kind (rank 2 uses the same rule on both axes).
    """

    kind: str
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (NONE, ORIGINAL, ADAPTIVE):
            raise ParameterError(f"unknown rpe kind {self.kind!r}")
        if self.kind == NONE:
            if self.table is not None:
                raise ParameterError("kind 'none' carries no table")
            return
        arr = np.asarray(self.table, dtype=np.float64)
        if arr.ndim not in (1, 2):
            raise ShapeError("rpe table must be rank 1 or 2")
        require_finite(arr, "rpe table")
        object.__setattr__(self, "table", freeze(arr))

    @classmethod
    def none(cls) -> RpeTable:
        return cls(NONE)

    @classmethod
    def original(cls, table) -> RpeTable:
        return cls(ORIGINAL, table)

    @classmethod
    def adaptive(cls, table) -> RpeTable:
        return cls(ADAPTIVE, table)


def rpe_matrix(rpe: RpeTable, m: int) -> np.ndarray:
    """Conventional M x M bias: entry (i, j) reads the table at i - j.

    The table has length 2M - 1 and is indexed with an offset of M - 1 so
    signed distances -(M-1)..M-1 all resolve.
    """
    if rpe.kind != ORIGINAL:
        raise ParameterError(f"rpe_matrix needs kind 'original', got {rpe.kind!r}")
    if rpe.table.ndim != 1 or rpe.table.shape[0] != 2 * m - 1:
        raise ShapeError(f"table shape {rpe.table.shape} does not fit M={m}")
    pos = np.arange(m)
    return rpe.table[np.subtract.outer(pos, pos) + m - 1]


def adaptive_rpe_matrix(rpe: RpeTable, m: int) -> np.ndarray:
    """Circular M x M bias: entry (i, j) reads the table at (i - j) mod M.

    The result is circulant, which is what makes full self-attention commute
    with token rotation.
    """
    if rpe.kind != ADAPTIVE:
        raise ParameterError(f"adaptive_rpe_matrix needs kind 'adaptive', got {rpe.kind!r}")
    if rpe.table.ndim != 1 or rpe.table.shape[0] != m:
        raise ShapeError(f"table shape {rpe.table.shape} does not fit M={m}")
    pos = np.arange(m)
    return rpe.table[np.mod(np.subtract.outer(pos, pos), m)]


def position_bias(rpe: RpeTable, grid_shape: tuple[int, ...]) -> np.ndarray | None:
    """Bias matrix over all tokens of a grid, or None for kind 'none'.

    Rank-2 grids apply the rank-1 indexing rule independently per axis on a
    2-D table.
    """
    if rpe.kind == NONE:
        return None
    if len(grid_shape) == 1:
        if rpe.kind == ORIGINAL:
            return rpe_matrix(rpe, grid_shape[0])
        return adaptive_rpe_matrix(rpe, grid_shape[0])
    gh, gw = grid_shape
    if rpe.table.ndim != 2:
        raise ShapeError("rank-2 grid needs a rank-2 rpe table")
    ph, pw = np.divmod(np.arange(gh * gw), gw)
    dh = np.subtract.outer(ph, ph)
    dw = np.subtract.outer(pw, pw)
    if rpe.kind == ADAPTIVE:
        if rpe.table.shape != (gh, gw):
            raise ShapeError(f"table shape {rpe.table.shape} does not fit grid {grid_shape}")
        return rpe.table[np.mod(dh, gh), np.mod(dw, gw)]
    if rpe.table.shape != (2 * gh - 1, 2 * gw - 1):
        raise ShapeError(f"table shape {rpe.table.shape} does not fit grid {grid_shape}")
    return rpe.table[dh + gh - 1, dw + gw - 1]


def sa(tokens: TokenMatrix, params: AttentionParams, rpe: RpeTable | None = None) -> TokenMatrix:
    """Scaled dot-product self-attention over all tokens, optional bias."""
    if tokens.dim != params.dim_in:
        raise ShapeError(f"tokens of dim {tokens.dim} vs projections of dim {params.dim_in}")
    rpe = RpeTable.none() if rpe is None else rpe
    q = tokens.data @ params.e_q
    k = tokens.data @ params.e_k
    v = tokens.data @ params.e_v
    logits = (q @ k.T) * params.scale
    bias = position_bias(rpe, tokens.grid_shape)
    if bias is not None:
        logits = logits + bias
    return TokenMatrix(softmax_rows(logits) @ v, tokens.grid_shape)


@dataclass(frozen=True)
class WindowConfig:
    """Window edge length, the token-energy norm order, and the scorer."""

    window: int
    energy_p: float = 2.0
    energy_fn: str = "max"

    def __post_init__(self):
        if self.window < 1:
            raise ParameterError(f"window must be >= 1, got {self.window}")
        if self.energy_p < 1:
            raise ParameterError(f"energy_p must be >= 1, got {self.energy_p}")
        if self.energy_fn not in WINDOW_FNS:
            raise ParameterError(
                f"unknown energy_fn {self.energy_fn!r}, choose from {sorted(WINDOW_FNS)}"
            )


def _check_window(tokens: TokenMatrix, cfg: WindowConfig) -> None:
    for g in tokens.grid_shape:
        if g % cfg.window:
            raise ShapeError(f"grid axis {g} is not divisible by window {cfg.window}")


def window_energy(tokens: TokenMatrix, cfg: WindowConfig) -> np.ndarray:
    """Grid of token energies pooled over the window anchored at each index.

    Entry k averages the lp norms of the tokens in the circular window of
    edge W starting at k.  Accumulation order over the window taps is fixed,
    so a grid rotation of the tokens rotates this grid bit-exactly.
    """
    _check_window(tokens, cfg)
    norms = np.sum(np.abs(tokens.data) ** cfg.energy_p, axis=1) ** (1.0 / cfg.energy_p)
    grid = norms.reshape(tokens.grid_shape)
    axes = tuple(range(tokens.rank))
    acc = np.zeros_like(grid)
    for delta in product(range(cfg.window), repeat=tokens.rank):
        acc += np.roll(grid, [-d for d in delta], axis=axes)
    return acc / float(cfg.window**tokens.rank)


def _window_blocks(tokens: TokenMatrix, w: int) -> np.ndarray:
    """Partition the grid into W-blocks, shape (num_windows, W**rank, D)."""
    d = tokens.dim
    if tokens.rank == 1:
        return tokens.data.reshape(-1, w, d)
    gh, gw = tokens.grid_shape
    blocks = tokens.grid().reshape(gh // w, w, gw // w, w, d)
    return blocks.transpose(0, 2, 1, 3, 4).reshape(-1, w * w, d)


def _window_grid(rank: int, w: int) -> tuple[int, ...]:
    return (w,) * rank if rank == 1 else (w, w)


def wsa(
    tokens: TokenMatrix,
    cfg: WindowConfig,
    params: AttentionParams,
    rpe: RpeTable | None = None,
) -> TokenMatrix:
    """Window self-attention on the fixed partition anchored at 0.

    Every non-overlapping W-block (rank 2: W x W tile) runs self-attention
    independently with the same projections and the same per-window bias
    table, and the outputs are reassembled in place.
    """
    _check_window(tokens, cfg)
    w = cfg.window
    blocks = _window_blocks(tokens, w)
    win_grid = _window_grid(tokens.rank, w)
    outs = [sa(TokenMatrix(b, win_grid), params, rpe).data for b in blocks]
    stacked = np.stack(outs)
    d_out = params.dim_out
    if tokens.rank == 1:
        data = stacked.reshape(tokens.count, d_out)
        return TokenMatrix(data, tokens.grid_shape)
    gh, gw = tokens.grid_shape
    tiles = stacked.reshape(gh // w, gw // w, w, w, d_out)
    data = tiles.transpose(0, 2, 1, 3, 4).reshape(tokens.count, d_out)
    return TokenMatrix(data, tokens.grid_shape)


def a_wsa(
    tokens: TokenMatrix,
    cfg: WindowConfig,
    params: AttentionParams,
    rpe: RpeTable | None = None,
) -> tuple[TokenMatrix, SelectionTrace]:
    """Window self-attention aligned to the best-energy window anchor.

    Scores each of the W (rank 2: W x W) candidate anchors by applying the
    configured functional to the window energies sampled at that phase,
    rotates the token grid to the winning anchor, and runs wsa there.  The
    output lives on the rotated grid; the chosen offset is recorded.
    """
    _check_window(tokens, cfg)
    w = cfg.window
    energies = window_energy(tokens, cfg)
    score = WINDOW_FNS[cfg.energy_fn]
    offsets = list(product(range(w), repeat=tokens.rank))
    scores = [
        score(energies[tuple(slice(o, None, w) for o in offs)]) for offs in offsets
    ]
    idx, tied = argmax_with_tie(scores)
    best = offsets[idx]
    out = wsa(tokens.shift(best), cfg, params, rpe)
    return out, SelectionTrace.single(WSA, best, tied)
