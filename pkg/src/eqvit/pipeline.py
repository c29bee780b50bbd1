"""Desk-scale models built from the adaptive blocks.

Two heads over one encoder:

  classify      tokenize -> [window attention -> patch merge] x depth
                -> full self-attention with position bias -> mean pool
                -> linear head
  encode_decode same encoder, then a decoder that scatters features back
                through the recorded merge phases and window offsets to a
                zero-filled map at the input resolution.

Every adaptive block can be swapped for its fixed baseline through a config
switch, which is how the ablation suites demonstrate that each one is
needed for shift invariance.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from math import prod

import numpy as np

from .attention import (
    ADAPTIVE,
    NONE,
    ORIGINAL,
    AttentionParams,
    RpeTable,
    WINDOW_FNS,
    WindowConfig,
    a_wsa,
    sa,
    wsa,
)
from .errors import ConfigError, ShapeError
from .merging import MergeConfig, a_pmerge, pmerge, unpool
from .numerics import GridSignal, Offset, argmax_tiebreak, freeze, require_finite
from .tokenizer import (
    INVARIANT_FNS,
    PatchEmbedConfig,
    TokenMatrix,
    a_token,
    token,
)
from .trace import MERGE, WSA, SelectionTrace, TraceEntry

SWITCHES = ("a_token", "a_wsa", "a_pmerge", "adaptive_rpe")


def _per_stage(value, depth: int, name: str) -> tuple[int, ...]:
    if isinstance(value, (int, np.integer)):
        return (int(value),) * depth
    vals = tuple(int(v) for v in value)
    if len(vals) != depth:
        raise ConfigError(f"{name} has {len(vals)} entries for depth {depth}")
    return vals


@dataclass(frozen=True)
class ModelConfig:
    """Architecture, energy choices, adaptive switches, and the weight seed.

    `windows` and `merge_factors` take one entry per stage (a bare int is
    broadcast).  `rpe_kind` picks the position-bias family; the
    `adaptive_rpe` switch downgrades kind "adaptive" to "original", which is
    the ablation baseline.  Dimensions double at each merge.
    """

    input_shape: tuple[int, ...] = (64,)
    channels: int = 2
    patch_len: int = 4
    depth: int = 2
    windows: tuple[int, ...] = (4, 4)
    merge_factors: tuple[int, ...] = (2, 2)
    embed_dim: int = 8
    num_classes: int = 4
    rpe_kind: str = "adaptive"
    token_energy: str = "sum_l2"
    window_energy_fn: str = "max"
    energy_p: float = 2.0
    a_token: bool = True
    a_wsa: bool = True
    a_pmerge: bool = True
    adaptive_rpe: bool = True
    seed: int = 0

    def __post_init__(self):
        shape = tuple(int(n) for n in self.input_shape)
        object.__setattr__(self, "input_shape", shape)
        if len(shape) not in (1, 2) or min(shape) < 1:
            raise ConfigError(f"input_shape {shape} must be rank 1 or 2, all axes >= 1")
        for name in ("channels", "patch_len", "embed_dim", "num_classes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.depth < 0:
            raise ConfigError("depth must be >= 0")
        object.__setattr__(self, "windows", _per_stage(self.windows, self.depth, "windows"))
        object.__setattr__(
            self, "merge_factors", _per_stage(self.merge_factors, self.depth, "merge_factors")
        )
        if self.rpe_kind not in (NONE, ORIGINAL, ADAPTIVE):
            raise ConfigError(f"unknown rpe_kind {self.rpe_kind!r}")
        if self.token_energy not in INVARIANT_FNS:
            raise ConfigError(f"unknown token_energy {self.token_energy!r}")
        if self.window_energy_fn not in WINDOW_FNS:
            raise ConfigError(f"unknown window_energy_fn {self.window_energy_fn!r}")
        if self.energy_p < 1:
            raise ConfigError("energy_p must be >= 1")
        for n in shape:
            if n % self.patch_len:
                raise ConfigError(f"axis {n} is not divisible by patch_len {self.patch_len}")
        grid = tuple(n // self.patch_len for n in shape)
        for s, (w, p) in enumerate(zip(self.windows, self.merge_factors)):
            if w < 1 or p < 1:
                raise ConfigError(f"stage {s}: window and merge factor must be >= 1")
            for g in grid:
                if g % w:
                    raise ConfigError(f"stage {s}: grid {grid} not divisible by window {w}")
                if g % p:
                    raise ConfigError(f"stage {s}: grid {grid} not divisible by factor {p}")
            grid = tuple(g // p for g in grid)

    @property
    def rank(self) -> int:
        return len(self.input_shape)

    @property
    def token_grid(self) -> tuple[int, ...]:
        return tuple(n // self.patch_len for n in self.input_shape)

    def stage_grids(self) -> list[tuple[int, ...]]:
        """Token grid entering each stage; one extra entry for the final grid."""
        grids = [self.token_grid]
        for p in self.merge_factors:
            grids.append(tuple(g // p for g in grids[-1]))
        return grids

    def stage_dims(self) -> list[int]:
        """Token dimension entering each stage, ending with the final dim."""
        return [self.embed_dim * 2**s for s in range(self.depth + 1)]

    @property
    def effective_rpe_kind(self) -> str:
        if self.rpe_kind == ADAPTIVE and not self.adaptive_rpe:
            return ORIGINAL
        return self.rpe_kind

    def disable(self, *switches: str) -> ModelConfig:
        """Copy of the config with the named adaptive switches turned off."""
        for s in switches:
            if s not in SWITCHES:
                raise ConfigError(f"unknown switch {s!r}, choose from {SWITCHES}")
        return dataclasses.replace(self, **{s: False for s in switches})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["input_shape"] = list(self.input_shape)
        d["windows"] = list(self.windows)
        d["merge_factors"] = list(self.merge_factors)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ModelConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("input_shape", "windows", "merge_factors"):
            if key in kwargs and isinstance(kwargs[key], list):
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class StageWeights:
    attn: AttentionParams
    rpe: RpeTable
    merge: MergeConfig


@dataclass(frozen=True)
class ModelWeights:
    patch: PatchEmbedConfig
    stages: tuple[StageWeights, ...]
    global_attn: AttentionParams | None
    global_rpe: RpeTable | None
    head: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.head, dtype=np.float64)
        require_finite(arr, "head")
        object.__setattr__(self, "head", freeze(arr))
        object.__setattr__(self, "stages", tuple(self.stages))


@dataclass(frozen=True)
class Model:
    config: ModelConfig
    weights: ModelWeights

    def classify(self, x: GridSignal):
        return classify(self, x)

    def encode_decode(self, x: GridSignal):
        return encode_decode(self, x)


def _rpe_for_grid(rng, kind: str, grid: tuple[int, ...]) -> RpeTable:
    if kind == NONE:
        return RpeTable.none()
    if kind == ADAPTIVE:
        return RpeTable.adaptive(rng.uniform(-0.5, 0.5, size=grid))
    return RpeTable.original(rng.uniform(-0.5, 0.5, size=tuple(2 * g - 1 for g in grid)))


def build_model(cfg: ModelConfig) -> Model:
    """Draw all weights i.i.d. uniform on [-0.5, 0.5] from a PCG64 stream.

    Draw order is fixed: patch embed, then per stage the q/k/v projections,
    window bias table, and merge projection, then the full-attention
    projections, its bias table, and the head.  Rebuilding from an equal
    config yields identical weights.
    """
    rng = np.random.default_rng(cfg.seed)
    rank = cfg.rank
    kind = cfg.effective_rpe_kind

    patch = PatchEmbedConfig(
        patch_len=cfg.patch_len,
        embed=rng.uniform(-0.5, 0.5, size=(cfg.patch_len**rank * cfg.channels, cfg.embed_dim)),
        invariant_fn=cfg.token_energy,
    )
    dims = cfg.stage_dims()
    stages = []
    for s in range(cfg.depth):
        d = dims[s]
        attn = AttentionParams(
            e_q=rng.uniform(-0.5, 0.5, size=(d, d)),
            e_k=rng.uniform(-0.5, 0.5, size=(d, d)),
            e_v=rng.uniform(-0.5, 0.5, size=(d, d)),
        )
        w = cfg.windows[s]
        rpe = _rpe_for_grid(rng, kind, (w,) * rank)
        p = cfg.merge_factors[s]
        merge = MergeConfig(
            factor=p,
            embed=rng.uniform(-0.5, 0.5, size=(p**rank * d, 2 * d)),
            energy_p=cfg.energy_p,
        )
        stages.append(StageWeights(attn=attn, rpe=rpe, merge=merge))

    d_final = dims[-1]
    if cfg.depth > 0:
        global_attn = AttentionParams(
            e_q=rng.uniform(-0.5, 0.5, size=(d_final, d_final)),
            e_k=rng.uniform(-0.5, 0.5, size=(d_final, d_final)),
            e_v=rng.uniform(-0.5, 0.5, size=(d_final, d_final)),
        )
        global_rpe = _rpe_for_grid(rng, kind, cfg.stage_grids()[-1])
    else:
        global_attn = None
        global_rpe = None
    head = rng.uniform(-0.5, 0.5, size=(d_final, cfg.num_classes))
    weights = ModelWeights(
        patch=patch,
        stages=tuple(stages),
        global_attn=global_attn,
        global_rpe=global_rpe,
        head=head,
    )
    return Model(config=cfg, weights=weights)


@dataclass(frozen=True)
class _StageRecord:
    # Decoder bookkeeping: offsets are None when the baseline twin ran.
    wsa_offset: Offset | None
    merge_phase: Offset | None
    pre_merge_grid: tuple[int, ...]
    factor: int


def _check_input(cfg: ModelConfig, x: GridSignal) -> None:
    if x.shape != cfg.input_shape or x.channels != cfg.channels:
        raise ShapeError(
            f"input {x.shape} x{x.channels}ch does not match "
            f"config {cfg.input_shape} x{cfg.channels}ch"
        )


def _encode(model: Model, x: GridSignal):
    cfg = model.config
    _check_input(cfg, x)
    trace = SelectionTrace()
    if cfg.a_token:
        tokens, tr = a_token(x, model.weights.patch)
        trace.extend(tr)
        token_offset = tr.entries[0].offset
    else:
        tokens = token(x, model.weights.patch)
        token_offset = (0,) * cfg.rank

    records = []
    for s in range(cfg.depth):
        sw = model.weights.stages[s]
        wcfg = WindowConfig(cfg.windows[s], cfg.energy_p, cfg.window_energy_fn)
        if cfg.a_wsa:
            tokens, tr = a_wsa(tokens, wcfg, sw.attn, sw.rpe)
            trace.extend(tr)
            wsa_offset = tr.entries[0].offset
        else:
            tokens = wsa(tokens, wcfg, sw.attn, sw.rpe)
            wsa_offset = None
        pre_merge_grid = tokens.grid_shape
        if cfg.a_pmerge:
            tokens, tr = a_pmerge(tokens, sw.merge)
            trace.extend(tr)
            phase = tr.entries[0].offset
        else:
            tokens = pmerge(tokens, sw.merge)
            phase = None
        records.append(_StageRecord(wsa_offset, phase, pre_merge_grid, sw.merge.factor))

    if cfg.depth > 0:
        tokens = sa(tokens, model.weights.global_attn, model.weights.global_rpe)
    return tokens, trace, records, token_offset


def classify(model: Model, x: GridSignal) -> tuple[np.ndarray, int, SelectionTrace]:
    """Mean-pooled logits, the argmax label, and the selection trace."""
    tokens, trace, _, _ = _encode(model, x)
    pooled = tokens.data.mean(axis=0)
    logits = pooled @ model.weights.head
    return logits, argmax_tiebreak(logits), trace


def encode_decode(model: Model, x: GridSignal) -> tuple[np.ndarray, SelectionTrace]:
    """Per-position feature map at input resolution, plus the trace.

    The decoder walks the stages in reverse: each merge is undone by
    scattering into the recorded phase (phase 0 for the baseline), each
    window alignment by rotating the grid back.  Finally each token's
    features land at its patch anchor; all other positions stay zero.
    """
    cfg = model.config
    tokens, trace, records, token_offset = _encode(model, x)
    feats = tokens
    for rec in reversed(records):
        entries = []
        if rec.wsa_offset is not None:
            entries.append(TraceEntry(WSA, rec.wsa_offset, False))
        phase = rec.merge_phase if rec.merge_phase is not None else (0,) * cfg.rank
        entries.append(TraceEntry(MERGE, phase, False))
        feats = unpool(feats, SelectionTrace(entries), rec.factor, rec.pre_merge_grid)

    out = np.zeros((*cfg.input_shape, feats.dim))
    out[tuple(slice(o, None, cfg.patch_len) for o in token_offset)] = feats.grid()
    return out, trace
