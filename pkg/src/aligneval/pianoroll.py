"""Continuous piano-rolls.

A piano-roll is a piecewise-constant map from a half-open time interval
``[0, duration)`` to a set of active pitches.  It is stored as a strictly
increasing list of changepoints, each carrying the pitch-set that holds
until the next changepoint.  Pitch-sets are Python ints used as bitsets,
so set differences reduce to ``(a ^ b).bit_count()``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

N_PITCHES = 128

SCORE_AXIS = "beats"
PERFORMANCE_AXIS = "seconds"


def popcount(mask: int) -> int:
    return mask.bit_count()


def mask_from_pitches(pitches: Iterable[int]) -> int:
    mask = 0
    for p in pitches:
        mask |= 1 << int(p)
    return mask


def pitches_from_mask(mask: int) -> frozenset[int]:
    out = []
    n = 0
    while mask:
        if mask & 1:
            out.append(n)
        mask >>= 1
        n += 1
    return frozenset(out)


def mask_to_bool(mask: int, n_pitches: int) -> np.ndarray:
    bits = np.zeros(n_pitches, dtype=bool)
    for p in pitches_from_mask(mask):
        bits[p] = True
    return bits


@dataclass(frozen=True, order=True)
class NoteEvent:
    onset: float
    pitch: int
    offset: float

    def __post_init__(self):
        if not self.onset < self.offset:
            raise ValueError(f"note onset {self.onset} must precede offset {self.offset}")
        if self.onset < 0:
            raise ValueError(f"negative onset {self.onset}")
        if self.pitch < 0:
            raise ValueError(f"negative pitch {self.pitch}")


@dataclass(frozen=True)
class NoteList:
    """Sorted note events on one time axis (score beats or performance seconds)."""

    notes: tuple[NoteEvent, ...]
    duration: float
    axis: str = SCORE_AXIS

    def __init__(self, notes: Iterable[NoteEvent], duration: float | None = None,
                 axis: str = SCORE_AXIS):
        notes = tuple(sorted(notes, key=lambda n: (n.onset, n.pitch, n.offset)))
        if duration is None:
            duration = max((n.offset for n in notes), default=0.0)
        if axis not in (SCORE_AXIS, PERFORMANCE_AXIS):
            raise ValueError(f"unknown axis {axis!r}")
        for n in notes:
            if not n.onset < duration:
                raise ValueError(f"note onset {n.onset} not inside [0, {duration})")
        object.__setattr__(self, "notes", notes)
        object.__setattr__(self, "duration", float(duration))
        object.__setattr__(self, "axis", axis)

    @classmethod
    def from_tuples(cls, triples: Iterable[tuple[int, float, float]], duration=None,
                    axis=SCORE_AXIS) -> "NoteList":
        """Build from ``(pitch, onset, offset)`` triples."""
        return cls((NoteEvent(float(on), int(p), float(off)) for p, on, off in triples),
                   duration, axis)

    def __len__(self):
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)

    @property
    def onsets(self) -> np.ndarray:
        return np.array([n.onset for n in self.notes], dtype=float)

    @property
    def pitches(self) -> np.ndarray:
        return np.array([n.pitch for n in self.notes], dtype=int)

    def without(self, indices: Iterable[int]) -> "NoteList":
        drop = set(indices)
        kept = [n for i, n in enumerate(self.notes) if i not in drop]
        return NoteList(kept, self.duration, self.axis)


@dataclass(frozen=True)
class PianoRoll:
    duration: float
    changepoints: tuple[float, ...]
    segments: tuple[int, ...]
    n_pitches: int = N_PITCHES
    _cps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"piano-roll duration must be positive, got {self.duration}")
        if len(self.changepoints) != len(self.segments) or not self.changepoints:
            raise ValueError("need one segment per changepoint, at least one")
        if self.changepoints[0] != 0:
            raise ValueError("first changepoint must be 0")
        cps = np.asarray(self.changepoints, dtype=float)
        if np.any(np.diff(cps) <= 0) or cps[-1] >= self.duration:
            raise ValueError("changepoints must increase strictly inside [0, duration)")
        limit = 1 << self.n_pitches
        for m in self.segments:
            if m < 0 or m >= limit:
                raise ValueError(f"pitch-set {m:#x} outside [0, {self.n_pitches})")
        for a, b in zip(self.segments, self.segments[1:]):
            if a == b:
                raise ValueError("adjacent segments must differ")
        object.__setattr__(self, "_cps", cps)

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple[float, float, int]], duration: float,
                       n_pitches: int = N_PITCHES) -> "PianoRoll":
        """Normalize disjoint ``(start, end, mask)`` intervals into a roll.

        Gaps become empty segments, pieces are clipped to ``[0, duration)``,
        zero-length pieces are dropped and equal neighbours are merged.
        """
        duration = float(duration)
        pieces = sorted((max(0.0, float(a)), min(float(b), duration), int(m))
                        for a, b, m in intervals)
        cps: list[float] = []
        segs: list[int] = []

        def push(t, m):
            if not segs or segs[-1] != m:
                cps.append(t)
                segs.append(m)

        cursor = 0.0
        for a, b, m in pieces:
            if b <= a:
                continue
            if a < cursor:
                raise ValueError("intervals overlap")
            if a > cursor:
                push(cursor, 0)
            push(a, m)
            cursor = b
        if cursor < duration:
            push(cursor, 0)
        if not cps:
            cps, segs = [0.0], [0]
        return cls(float(duration), tuple(cps), tuple(segs), n_pitches)

    @property
    def boundaries(self) -> np.ndarray:
        """Changepoints followed by the duration."""
        return np.append(self._cps, self.duration)

    def intervals(self) -> list[tuple[float, float, int]]:
        b = self.boundaries
        return [(float(b[k]), float(b[k + 1]), m) for k, m in enumerate(self.segments)]

    def onset_times(self) -> np.ndarray:
        """Changepoints at which at least one pitch switches on."""
        prev = 0
        out = []
        for t, m in zip(self.changepoints, self.segments):
            if m & ~prev:
                out.append(t)
            prev = m
        return np.array(out, dtype=float)

    def __call__(self, t: float) -> frozenset[int]:
        return sample(self, t)


def empty_roll(duration: float, n_pitches: int = N_PITCHES) -> PianoRoll:
    return PianoRoll(float(duration), (0.0,), (0,), n_pitches)


def from_notes(notes: NoteList, n_pitches: int = N_PITCHES) -> PianoRoll:
    """Active-set piano-roll of a note list; overlapping same-pitch notes merge."""
    events: dict[float, list[tuple[int, int]]] = {}
    for n in notes:
        if n.pitch >= n_pitches:
            raise ValueError(f"pitch {n.pitch} outside [0, {n_pitches})")
        events.setdefault(n.onset, []).append((n.pitch, 1))
        off = min(n.offset, notes.duration)
        events.setdefault(off, []).append((n.pitch, -1))

    counts = [0] * n_pitches
    mask = 0
    intervals = []
    last_t, last_mask = 0.0, 0
    for t in sorted(events):
        for p, d in events[t]:
            counts[p] += d
            if counts[p] > 0:
                mask |= 1 << p
            else:
                mask &= ~(1 << p)
        if t > last_t:
            intervals.append((last_t, t, last_mask))
        last_t, last_mask = t, mask
    if last_t < notes.duration:
        intervals.append((last_t, notes.duration, last_mask))
    return PianoRoll.from_intervals(intervals, notes.duration, n_pitches)


def segment_index(roll: PianoRoll, t: float) -> int:
    if not 0 <= t < roll.duration:
        raise ValueError(f"time {t} outside [0, {roll.duration})")
    return bisect.bisect_right(roll.changepoints, t) - 1


def sample(roll: PianoRoll, t: float) -> frozenset[int]:
    return pitches_from_mask(roll.segments[segment_index(roll, t)])


def sample_mask(roll: PianoRoll, t: float) -> int:
    return roll.segments[segment_index(roll, t)]


def segment_bool_matrix(roll: PianoRoll) -> np.ndarray:
    """``(n_segments, n_pitches)`` boolean matrix of the segment pitch-sets."""
    return np.stack([mask_to_bool(m, roll.n_pitches) for m in roll.segments])


def frame_matrix(roll: PianoRoll, dt: float) -> np.ndarray:
    """Discrete-time roll: column ``k`` is the pitch indicator at time ``k*dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_frames = int(np.ceil(roll.duration / dt))
    times = np.arange(n_frames) * dt
    times = times[times < roll.duration]
    idx = np.searchsorted(roll._cps, times, side="right") - 1
    out = np.zeros((roll.n_pitches, n_frames), dtype=np.uint8)
    out[:, :len(times)] = segment_bool_matrix(roll)[idx].T
    return out


def l1_distance(a: PianoRoll, b: PianoRoll) -> float:
    """Time-averaged count of differing pitches between two rolls of equal duration."""
    if a.duration != b.duration:
        raise ValueError(f"durations differ: {a.duration} vs {b.duration}")
    if a.n_pitches != b.n_pitches:
        raise ValueError(f"pitch ranges differ: {a.n_pitches} vs {b.n_pitches}")
    cuts = sorted(set(a.changepoints) | set(b.changepoints))
    cuts.append(a.duration)
    ia = ib = 0
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        while ia + 1 < len(a.changepoints) and a.changepoints[ia + 1] <= lo:
            ia += 1
        while ib + 1 < len(b.changepoints) and b.changepoints[ib + 1] <= lo:
            ib += 1
        total += (a.segments[ia] ^ b.segments[ib]).bit_count() * (hi - lo)
    return total / a.duration


def roll_from_pitch_sets(changepoints: Sequence[float], pitch_sets: Sequence[Iterable[int]],
                         duration: float, n_pitches: int = N_PITCHES) -> PianoRoll:
    """Convenience constructor from explicit pitch collections."""
    bounds = list(changepoints) + [duration]
    return PianoRoll.from_intervals(
        ((bounds[k], bounds[k + 1], mask_from_pitches(ps)) for k, ps in enumerate(pitch_sets)),
        duration, n_pitches)
