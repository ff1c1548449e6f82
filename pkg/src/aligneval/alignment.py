"""Monotone alignment functions from score position (beats) to performance time (seconds).

An :class:`AlignmentFn` is stored as a list of knots ``(s, t)``, linear in
between.  A repeated ``s`` with increasing ``t`` is a jump; a repeated ``t``
with increasing ``s`` is a flat (many-to-one) stretch.  Evaluation is
right-continuous: at a jump the upper value is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .pianoroll import NoteList, PianoRoll, pitches_from_mask


@dataclass(frozen=True)
class AlignmentFn:
    knots: tuple[tuple[float, float], ...]
    S: float
    T: float
    _s: np.ndarray = field(init=False, repr=False, compare=False)
    _t: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, knots: Iterable[Sequence[float]], S: float | None = None,
                 T: float | None = None):
        pairs = tuple((float(s), float(t)) for s, t in knots)
        if not pairs:
            raise ValueError("alignment needs at least one knot")
        s = np.array([p[0] for p in pairs])
        t = np.array([p[1] for p in pairs])
        S = float(s[-1]) if S is None else float(S)
        T = float(t[-1]) if T is None else float(T)
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
            raise ValueError("knots must be finite")
        if s[0] != 0:
            raise ValueError(f"first knot must sit at s=0, got {s[0]}")
        if s[-1] != S:
            raise ValueError(f"last knot must sit at s=S={S}, got {s[-1]}")
        if np.any(np.diff(s) < 0):
            raise ValueError("score positions of knots must be non-decreasing")
        if np.any(np.diff(t) < 0):
            raise ValueError("alignment is not monotone: performance times decrease")
        if t[0] < 0 or t[-1] > T:
            raise ValueError(f"knot times must lie in [0, T={T}]")
        if not S > 0 or not T > 0:
            raise ValueError("S and T must be positive")
        object.__setattr__(self, "knots", pairs)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_t", t)

    @property
    def s(self) -> np.ndarray:
        return self._s

    @property
    def t(self) -> np.ndarray:
        return self._t

    def __call__(self, s):
        return evaluate_at(self, s)

    def __len__(self):
        return len(self.knots)


@dataclass(frozen=True)
class WarpPath:
    """Monotone lattice path of ``(score frame, performance frame)`` index pairs."""

    steps: np.ndarray
    ds: float
    dt: float

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64).reshape(-1, 2)
        if len(steps) == 0:
            raise ValueError("empty warp path")
        if tuple(steps[0]) != (0, 0):
            raise ValueError("warp path must start at (0, 0)")
        if np.any(np.diff(steps, axis=0) < 0):
            raise ValueError("warp path indices must be non-decreasing")
        if not self.ds > 0 or not self.dt > 0:
            raise ValueError("frame steps must be positive")
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return len(self.steps)


def identity_alignment(S: float, T: float | None = None) -> AlignmentFn:
    """Uniform-tempo alignment (straight line from (0, 0) to (S, T))."""
    T = S if T is None else T
    return AlignmentFn([(0.0, 0.0), (S, T)], S, T)


def evaluate_at(tau: AlignmentFn, s):
    """Right-continuous piecewise-linear evaluation; accepts scalars or arrays."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(arr > tau.S) or np.any(np.isnan(arr)):
        raise ValueError(f"score position outside [0, {tau.S}]")
    ks, kt = tau.s, tau.t
    hi = np.searchsorted(ks, arr, side="right")
    at_end = hi >= len(ks)
    hi = np.minimum(hi, len(ks) - 1)
    lo = np.maximum(hi - 1, 0)
    s0, s1 = ks[lo], ks[hi]
    t0, t1 = kt[lo], kt[hi]
    width = s1 - s0
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(width > 0, (arr - s0) / np.where(width > 0, width, 1.0), 0.0)
    out = t0 + (t1 - t0) * frac
    out = np.where(at_end, kt[-1], out)
    return float(out) if out.ndim == 0 else out


def _interp_piece(s0, t0, s1, t1, x):
    if x == s1:
        return t1
    return t0 + (t1 - t0) * ((x - s0) / (s1 - s0))


def apply(tau: AlignmentFn, score: PianoRoll) -> PianoRoll:
    """Performance-aligned score: warp ``score`` onto ``[0, T)`` through ``tau``.

    Each performance time receives the union of score pitch-sets over its
    inverse image.  The result is the right-continuous roll; the instant a
    flat stretch collapses to has measure zero and is not represented (see
    :func:`pscore_at` for exact pointwise values).  Times outside the image
    of ``tau`` are silent.
    """
    if score.duration != tau.S:
        raise ValueError(f"score duration {score.duration} != alignment S {tau.S}")
    bounds = score.boundaries
    segs = score.segments
    intervals = []
    for (s0, t0), (s1, t1) in zip(tau.knots, tau.knots[1:]):
        if t1 <= t0:
            continue
        if s1 == s0:
            if s0 < score.duration:
                k = np.searchsorted(bounds, s0, side="right") - 1
                intervals.append((t0, t1, segs[k]))
            continue
        k = int(np.searchsorted(bounds, s0, side="right") - 1)
        while k < len(segs) and bounds[k] < s1:
            a = max(bounds[k], s0)
            b = min(bounds[k + 1], s1)
            ta = _interp_piece(s0, t0, s1, t1, a)
            tb = _interp_piece(s0, t0, s1, t1, b)
            if tb > ta:
                intervals.append((ta, tb, segs[k]))
            k += 1
    return PianoRoll.from_intervals(intervals, tau.T, score.n_pitches)


def pscore_at(tau: AlignmentFn, score: PianoRoll, t: float) -> frozenset[int]:
    """Exact union of score pitch-sets over the inverse image of performance time ``t``.

    Jumps hold the score value at the jump position across the jump; a
    flat stretch contributes every score segment it covers.
    """
    bounds = score.boundaries
    mask = 0

    def seg(s):
        return score.segments[int(np.searchsorted(bounds, s, side="right") - 1)]

    for (s0, t0), (s1, t1) in zip(tau.knots, tau.knots[1:]):
        if t0 == t1 == t and s1 > s0:
            lo = int(np.searchsorted(bounds, s0, side="right") - 1)
            hi = int(np.searchsorted(bounds, s1, side="left"))
            for k in range(lo, hi):
                mask |= score.segments[k]
        elif t0 <= t < t1:
            s = s0 if s1 == s0 else s0 + (s1 - s0) * (t - t0) / (t1 - t0)
            if s < score.duration:
                mask |= seg(s)
    return pitches_from_mask(mask)


def linearize(tau: AlignmentFn, changepoints: Iterable[float]) -> AlignmentFn:
    """Canonical representative: linear between ``tau``'s values at the changepoints."""
    grid = np.unique(np.concatenate([[0.0, tau.S], np.asarray(list(changepoints), float)]))
    grid = grid[(grid >= 0) & (grid <= tau.S)]
    values = np.atleast_1d(evaluate_at(tau, grid))
    return AlignmentFn(zip(grid, values), tau.S, tau.T)


def from_path(path: WarpPath, S: float | None = None, T: float | None = None) -> AlignmentFn:
    """Right-continuous alignment through a DTW lattice path.

    Runs of equal score index collapse to their first and last performance
    frames, so a vertical run becomes a jump.  A terminal knot ``(S, T)``
    closes the function; by default ``S`` and ``T`` are one frame past the
    last path cell.
    """
    steps = path.steps
    i_last, j_last = (int(v) for v in steps[-1])
    S = (i_last + 1) * path.ds if S is None else float(S)
    T = (j_last + 1) * path.dt if T is None else float(T)
    knots = []
    i = steps[:, 0]
    starts = np.flatnonzero(np.r_[True, i[1:] != i[:-1]])
    ends = np.r_[starts[1:] - 1, len(steps) - 1]
    for a, b in zip(starts, ends):
        s = float(i[a] * path.ds)
        knots.append((s, float(steps[a, 1] * path.dt)))
        if steps[b, 1] != steps[a, 1]:
            knots.append((s, float(steps[b, 1] * path.dt)))
    if knots[-1][0] > S or knots[-1][1] > T:
        raise ValueError("path runs past the requested (S, T)")
    knots.append((S, T))
    return AlignmentFn(knots, S, T)


def warp_onsets(tau: AlignmentFn, notes: NoteList) -> np.ndarray:
    """Performance times of score-note onsets.

    Onsets are knots of any linearization over the score's changepoints,
    so this is ``tau`` evaluated at each onset.
    """
    onsets = notes.onsets
    if np.any(onsets > tau.S):
        raise ValueError("note onset beyond the alignment's score range")
    return np.atleast_1d(evaluate_at(tau, onsets))


def mean_inverse_tempo(tau: AlignmentFn) -> float:
    """Average slope (seconds per beat) over ``[0, S]``, summed piece by piece.

    Jumps count with their full height.
    """
    ds = np.diff(tau.s)
    dt = np.diff(tau.t)
    slopes_times_width = np.where(ds > 0, dt / np.where(ds > 0, ds, 1.0) * ds, dt)
    return float(np.sum(slopes_times_width) / tau.S)


def inverse_tempo_variance(tau: AlignmentFn, rho: float | None = None) -> float:
    """Variance of the slope around ``rho`` (default ``T/S``), averaged over score time.

    Jumps carry infinite variance.
    """
    rho = tau.T / tau.S if rho is None else rho
    ds = np.diff(tau.s)
    dt = np.diff(tau.t)
    if np.any((ds == 0) & (dt > 0)):
        return float("inf")
    keep = ds > 0
    slopes = dt[keep] / ds[keep]
    return float(np.sum((slopes - rho) ** 2 * ds[keep]) / tau.S)
