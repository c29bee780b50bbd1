"""Shift-consistency metrics over sampled offset pairs.

c_cons checks that two random circular shifts of one input get the same
label.  mascc does the per-position analogue for dense maps: decode both
shifted inputs, rotate the maps back, and compare argmax labels everywhere.
s_cons_zeropad repeats the label check with standard zero-filling shifts,
where circular reasoning no longer applies and scores drop below 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

import numpy as np

from .errors import ParameterError, ShapeError
from .numerics import GridSignal, Offset, as_offset, circular_shift


@dataclass(frozen=True)
class ShiftSampler:
    """Uniform integer offsets in [0, max_offset] per axis, PCG64 stream."""

    max_offset: tuple[int, ...]
    pairs_per_input: int = 5
    seed: int = 0

    def __post_init__(self):
        offs = self.max_offset
        if isinstance(offs, (int, np.integer)):
            offs = (int(offs),)
        offs = tuple(int(o) for o in offs)
        if any(o < 0 for o in offs):
            raise ParameterError(f"max_offset {offs} must be non-negative")
        if self.pairs_per_input < 1:
            raise ParameterError("pairs_per_input must be >= 1")
        object.__setattr__(self, "max_offset", offs)

    @classmethod
    def for_shape(cls, shape: tuple[int, ...], pairs_per_input: int = 5, seed: int = 0):
        """Offsets drawn from [0, axis/2) on every axis."""
        return cls(
            max_offset=tuple(max(n // 2 - 1, 0) for n in shape),
            pairs_per_input=pairs_per_input,
            seed=seed,
        )

    @property
    def rank(self) -> int:
        return len(self.max_offset)

    def sample_pairs(self, count: int) -> np.ndarray:
        """Offset pairs, shape (count, pairs_per_input, 2, rank)."""
        rng = np.random.default_rng(self.seed)
        high = np.asarray(self.max_offset) + 1
        return rng.integers(0, high, size=(count, self.pairs_per_input, 2, self.rank))

    def check_shape(self, shape: tuple[int, ...]) -> None:
        if len(shape) != self.rank:
            raise ShapeError(f"sampler rank {self.rank} vs input rank {len(shape)}")
        if any(o >= n for o, n in zip(self.max_offset, shape)):
            raise ShapeError(f"max_offset {self.max_offset} not below shape {shape}")


@dataclass(frozen=True)
class TrialRecord:
    input_id: int
    shift_a: Offset
    shift_b: Offset
    agreement: float
    divergence: float
    tied: bool

    def to_dict(self) -> dict:
        return {
            "input_id": self.input_id,
            "shift_a": list(self.shift_a),
            "shift_b": list(self.shift_b),
            "agreement": self.agreement,
            "divergence": self.divergence,
            "tied": self.tied,
        }


@dataclass(frozen=True)
class ConsistencyReport:
    metric: str
    records: tuple[TrialRecord, ...]
    aggregate: float
    max_divergence: float
    tie_count: int

    @classmethod
    def from_records(cls, metric: str, records) -> ConsistencyReport:
        records = tuple(records)
        if not records:
            raise ParameterError("a consistency report needs at least one trial")
        return cls(
            metric=metric,
            records=records,
            aggregate=fmean(r.agreement for r in records),
            max_divergence=max(r.divergence for r in records),
            tie_count=sum(1 for r in records if r.tied),
        )

    @property
    def trials(self) -> int:
        return len(self.records)

    def summary(self) -> dict:
        return {
            "metric": self.metric,
            "trials": self.trials,
            "aggregate": self.aggregate,
            "max_divergence": self.max_divergence,
            "tie_count": self.tie_count,
        }

    def to_dict(self) -> dict:
        d = self.summary()
        d["records"] = [r.to_dict() for r in self.records]
        return d


def shift_zeropad(x: GridSignal, off) -> GridSignal:
    """Standard (non-circular) shift: out[n] = x[n + off], zeros past the end."""
    offs = as_offset(off, x.rank)
    if any(o < 0 for o in offs):
        raise ParameterError(f"zero-pad shift offsets must be non-negative, got {offs}")
    out = np.zeros_like(x.data)
    src = x.data[tuple(slice(o, None) for o in offs)]
    out[tuple(slice(0, s) for s in src.shape[: x.rank])] = src
    return GridSignal(out)


def _label_metric(metric, model, inputs, sampler: ShiftSampler, shifter) -> ConsistencyReport:
    records = []
    all_pairs = sampler.sample_pairs(len(inputs))
    for i, x in enumerate(inputs):
        sampler.check_shape(x.shape)
        for pair in all_pairs[i]:
            off_a, off_b = (tuple(int(o) for o in p) for p in pair)
            logits_a, label_a, trace_a = model.classify(shifter(x, off_a))
            logits_b, label_b, trace_b = model.classify(shifter(x, off_b))
            records.append(
                TrialRecord(
                    input_id=i,
                    shift_a=off_a,
                    shift_b=off_b,
                    agreement=1.0 if label_a == label_b else 0.0,
                    divergence=float(np.max(np.abs(logits_a - logits_b))),
                    tied=trace_a.any_tied or trace_b.any_tied,
                )
            )
    return ConsistencyReport.from_records(metric, records)


def c_cons(model, inputs, sampler: ShiftSampler) -> ConsistencyReport:
    """Label agreement between two random circular shifts of each input."""
    return _label_metric("c_cons", model, inputs, sampler, circular_shift)


def s_cons_zeropad(model, inputs, sampler: ShiftSampler) -> ConsistencyReport:
    """Label agreement under standard zero-filling shifts."""
    return _label_metric("s_cons_zeropad", model, inputs, sampler, shift_zeropad)


def mascc(model, inputs, sampler: ShiftSampler) -> ConsistencyReport:
    """Mean per-position argmax agreement of shifted-back decoded maps.

    Each decoded map is rotated back by its own input shift before
    comparison, so a perfectly equivariant model scores exactly 1.0.
    """
    records = []
    all_pairs = sampler.sample_pairs(len(inputs))
    for i, x in enumerate(inputs):
        sampler.check_shape(x.shape)
        axes = tuple(range(x.rank))
        for pair in all_pairs[i]:
            off_a, off_b = (tuple(int(o) for o in p) for p in pair)
            map_a, trace_a = model.encode_decode(circular_shift(x, off_a))
            map_b, trace_b = model.encode_decode(circular_shift(x, off_b))
            back_a = np.roll(map_a, off_a, axis=axes)
            back_b = np.roll(map_b, off_b, axis=axes)
            labels_a = np.argmax(back_a, axis=-1)
            labels_b = np.argmax(back_b, axis=-1)
            records.append(
                TrialRecord(
                    input_id=i,
                    shift_a=off_a,
                    shift_b=off_b,
                    agreement=float(np.mean(labels_a == labels_b)),
                    divergence=float(np.max(np.abs(back_a - back_b))),
                    tied=trace_a.any_tied or trace_b.any_tied,
                )
            )
    return ConsistencyReport.from_records("mascc", records)


def synthetic_inputs(
    shape: tuple[int, ...], channels: int, count: int, seed: int = 0
) -> list[GridSignal]:
    """Deterministic test inputs: uniform noise, ramps, single impulses."""
    rng = np.random.default_rng(seed)
    shape = tuple(int(n) for n in shape)
    out = []
    for i in range(count):
        kind = i % 4
        if kind == 3:
            # Ramp along the first axis, per-channel slope.
            ramp = np.linspace(0.0, 1.0, shape[0]).reshape(shape[0], *(1,) * len(shape))
            slopes = rng.uniform(0.5, 2.0, size=channels)
            data = np.broadcast_to(ramp, (*shape, channels)) * slopes
        elif kind == 2:
            # Single spike on a zero background.
            data = np.zeros((*shape, channels))
            pos = tuple(int(rng.integers(0, n)) for n in shape)
            data[(*pos, int(rng.integers(0, channels)))] = float(rng.uniform(2.0, 4.0))
        else:
            data = rng.uniform(-1.0, 1.0, size=(*shape, channels))
        out.append(GridSignal(data))
    return out
