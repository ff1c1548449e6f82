"""Synthetic alignments with known shape, for round-trip tests and fixtures."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

from .alignment import AlignmentFn, evaluate_at
from .pianoroll import PERFORMANCE_AXIS, NoteEvent, NoteList

WARP_KINDS = ("constant-tempo", "piecewise", "smooth-rubato", "with-jump")

# local tempo is drawn in [1/RATIO_SPREAD, RATIO_SPREAD] times the mean and then
# renormalized, which keeps the final ratio inside [1/RATIO_SPREAD**2, RATIO_SPREAD**2]
RATIO_SPREAD = 2 ** 0.5
RUBATO_CONTROLS = 8
RUBATO_KNOTS_PER_UNIT = 20


def _segment_times(rng, widths: np.ndarray, T: float, spread: float) -> np.ndarray:
    """Cumulative times for score pieces of the given widths, ending exactly at ``T``."""
    ratios = np.exp(rng.uniform(-np.log(spread), np.log(spread), len(widths)))
    dur = ratios * widths
    times = np.r_[0.0, np.cumsum(dur)] * (T / dur.sum())
    times[-1] = T
    return times


def _breaks(rng, S: float, n: int) -> np.ndarray:
    inner = np.sort(rng.uniform(0.1, 0.9, n - 1)) * S
    return np.r_[0.0, inner, S]


def synthetic_warp(kind: str, seed: int, S: float, T: float, n_pieces: int | None = None) -> AlignmentFn:
    """A random monotone alignment from ``[0, S]`` onto ``[0, T]``.

    ``piecewise`` and ``smooth-rubato`` keep the local tempo within a factor
    of two of ``T / S``.  ``with-jump`` is piecewise with one duplicated
    score position.
    """
    if not (S > 0 and T > 0):
        raise ValueError("S and T must be positive")
    if kind not in WARP_KINDS:
        raise ValueError(f"unknown warp kind {kind!r}; expected one of {WARP_KINDS}")
    rng = np.random.default_rng(seed)
    if kind == "constant-tempo":
        return AlignmentFn([(0.0, 0.0), (S, T)], S, T)

    if kind == "piecewise":
        s = _breaks(rng, S, n_pieces or int(rng.integers(3, 7)))
        return AlignmentFn(zip(s, _segment_times(rng, np.diff(s), T, RATIO_SPREAD)), S, T)

    if kind == "smooth-rubato":
        n = n_pieces or RUBATO_CONTROLS
        cs = np.linspace(0.0, S, n + 1)
        ct = _segment_times(rng, np.diff(cs), T, RATIO_SPREAD)
        curve = PchipInterpolator(cs, ct)
        s = np.linspace(0.0, S, max(n + 1, int(np.ceil(RUBATO_KNOTS_PER_UNIT * S)) + 1))
        t = np.clip(np.maximum.accumulate(curve(s)), 0.0, T)
        t[0], t[-1] = 0.0, T
        s[-1] = S
        return AlignmentFn(zip(s, t), S, T)

    # with-jump: reserve a slice of the performance for the jump itself
    n = n_pieces or int(rng.integers(3, 6))
    s = _breaks(rng, S, n)
    gap = rng.uniform(0.05, 0.15) * T
    times = _segment_times(rng, np.diff(s), T - gap, RATIO_SPREAD)
    where = int(rng.integers(1, n))
    knots = list(zip(s[:where + 1], times[:where + 1]))
    knots += [(s[k], times[k] + gap) for k in range(where, n + 1)]
    knots[-1] = (S, T)
    return AlignmentFn(knots, S, T)


def warp_notes(notes: NoteList, tau: AlignmentFn) -> NoteList:
    """Performance-time note list: every onset and offset mapped through ``tau``.

    Notes collapsed to an instant by a flat stretch are dropped.
    """
    if notes.duration != tau.S:
        raise ValueError(f"note list spans {notes.duration}, alignment domain is {tau.S}")
    if len(notes) == 0:
        return NoteList([], tau.T, PERFORMANCE_AXIS)
    on = np.atleast_1d(evaluate_at(tau, notes.onsets))
    off = np.atleast_1d(evaluate_at(tau, np.array([n.offset for n in notes])))
    kept = [NoteEvent(float(a), n.pitch, float(b)) for n, a, b in zip(notes, on, off)
            if b > a and a < tau.T]
    return NoteList(kept, tau.T, PERFORMANCE_AXIS)
