"""Temporal and note-based alignment metrics.

Temporal metrics compare two alignments as functions.  Both are linearized
at the score's changepoints and the error integral is evaluated exactly
piece by piece, up to the last score onset.  Note metrics compare onset
times of corresponding notes.  Everything is reported in milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .alignment import AlignmentFn, evaluate_at, warp_onsets
from .pianoroll import NoteList, PianoRoll


@dataclass(frozen=True)
class OnsetPairs:
    """Candidate-aligned onsets ``s`` and reference onsets ``p``, both in seconds."""

    s: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).ravel()
        p = np.asarray(self.p, dtype=float).ravel()
        if s.shape != p.shape:
            raise ValueError(f"onset vectors differ in length: {len(s)} vs {len(p)}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.s)

    @property
    def deviations(self) -> np.ndarray:
        return self.s - self.p


@dataclass
class MetricReport:
    mad_ms: float
    rmse_ms: float
    note_mad_ms: float
    note_rmse_ms: float
    recognition_rate: float
    matched_fraction: float
    n_notes: int
    n_matched: int
    threshold_ms: float = 50.0

    def to_dict(self) -> dict:
        return asdict(self)


def last_onset(score: PianoRoll) -> float:
    onsets = score.onset_times()
    if len(onsets) == 0:
        return 0.0
    return float(onsets[-1])


def _error_grid(tau: AlignmentFn, tau_star: AlignmentFn, score: PianoRoll,
                end: float | None):
    end = last_onset(score) if end is None else float(end)
    if not end > 0:
        raise ValueError("score has no onset after position 0; the error integral is empty")
    grid = np.asarray(score.changepoints, dtype=float)
    grid = np.unique(np.r_[0.0, grid[grid <= end], end])
    err = np.atleast_1d(evaluate_at(tau, grid)) - np.atleast_1d(evaluate_at(tau_star, grid))
    return grid, err, end


def _abs_integral(e0: np.ndarray, e1: np.ndarray, h: np.ndarray) -> np.ndarray:
    a0, a1 = np.abs(e0), np.abs(e1)
    same_sign = e0 * e1 >= 0
    denom = np.where(same_sign, 1.0, a0 + a1)
    # opposite signs: the linear error crosses zero at a0/(a0+a1) of the piece
    return np.where(same_sign, 0.5 * (a0 + a1), 0.5 * (a0 ** 2 + a1 ** 2) / denom) * h


def temporal_mad(tau: AlignmentFn, tau_star: AlignmentFn, score: PianoRoll,
                 end: float | None = None) -> float:
    """Mean absolute difference of the linearized alignments, in ms."""
    grid, err, end = _error_grid(tau, tau_star, score, end)
    total = np.sum(_abs_integral(err[:-1], err[1:], np.diff(grid)))
    return 1000.0 * float(total) / end


def temporal_rmse(tau: AlignmentFn, tau_star: AlignmentFn, score: PianoRoll,
                  end: float | None = None) -> float:
    """Root-mean-square difference of the linearized alignments, in ms."""
    grid, err, end = _error_grid(tau, tau_star, score, end)
    e0, e1 = err[:-1], err[1:]
    total = np.sum((e0 * e0 + e0 * e1 + e1 * e1) / 3.0 * np.diff(grid))
    return 1000.0 * math.sqrt(float(total) / end)


def _check_pairs(pairs: OnsetPairs):
    if len(pairs) == 0:
        raise ValueError("no onset pairs")


def note_mad(pairs: OnsetPairs) -> float:
    _check_pairs(pairs)
    return 1000.0 * float(np.mean(np.abs(pairs.deviations)))


def note_rmse(pairs: OnsetPairs) -> float:
    _check_pairs(pairs)
    return 1000.0 * math.sqrt(float(np.mean(pairs.deviations ** 2)))


def recognition_rate(pairs: OnsetPairs, threshold_ms: float = 50.0) -> float:
    """Fraction of onsets within ``threshold_ms`` of the reference."""
    _check_pairs(pairs)
    if not threshold_ms > 0:
        raise ValueError("threshold must be positive")
    dev_ms = np.abs(pairs.deviations) * 1000.0
    return float(np.mean(dev_ms <= threshold_ms))


@dataclass(frozen=True)
class Correspondence:
    """Score-to-transcript note matching built from a reference alignment."""

    score_indices: np.ndarray
    transcript_indices: np.ndarray
    score_onsets: np.ndarray
    transcript_onsets: np.ndarray
    unmatched: tuple[int, ...]
    n_notes: int

    @property
    def n_matched(self) -> int:
        return len(self.score_indices)

    @property
    def matched_fraction(self) -> float:
        return self.n_matched / self.n_notes if self.n_notes else 0.0

    def pairs(self, candidate: AlignmentFn) -> OnsetPairs:
        """Onsets of the matched score notes under ``candidate`` vs. their transcript onsets."""
        s = np.atleast_1d(evaluate_at(candidate, self.score_onsets)) if self.n_matched else []
        return OnsetPairs(s, self.transcript_onsets)


def correspond_notes(score_notes: NoteList, tau_star: AlignmentFn, transcript_notes: NoteList,
                     window_ms: float = 100.0, allow_shared: bool = False) -> Correspondence:
    """Match each score note to the nearest same-pitch transcript onset.

    Score notes are visited in order; a match needs the transcript onset
    within ``window_ms`` of the warped score onset.  Unless
    ``allow_shared``, a transcript note is consumed by its first match.
    """
    window = window_ms / 1000.0
    by_pitch: dict[int, list[int]] = {}
    for j, n in enumerate(transcript_notes):
        by_pitch.setdefault(n.pitch, []).append(j)
    t_onsets = transcript_notes.onsets
    used = np.zeros(len(transcript_notes), dtype=bool)
    targets = warp_onsets(tau_star, score_notes) if len(score_notes) else np.array([])

    si, tj, unmatched = [], [], []
    for i, (n, t) in enumerate(zip(score_notes, targets)):
        best, best_dist = -1, math.inf
        for j in by_pitch.get(n.pitch, ()):
            if used[j] and not allow_shared:
                continue
            d = abs(t_onsets[j] - t)
            if d < best_dist:
                best, best_dist = j, d
        if best >= 0 and best_dist <= window:
            si.append(i)
            tj.append(best)
            used[best] = True
        else:
            unmatched.append(i)
    si_arr = np.array(si, dtype=int)
    return Correspondence(
        score_indices=si_arr,
        transcript_indices=np.array(tj, dtype=int),
        score_onsets=score_notes.onsets[si_arr] if len(si_arr) else np.array([]),
        transcript_onsets=t_onsets[np.array(tj, dtype=int)] if tj else np.array([]),
        unmatched=tuple(unmatched),
        n_notes=len(score_notes),
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-d sequences of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("pearson is undefined for a constant sequence")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def evaluate_alignment(candidate: AlignmentFn, ground_truth: AlignmentFn, score: PianoRoll,
                       score_notes: NoteList, transcript_notes: NoteList,
                       threshold_ms: float = 50.0, window_ms: float = 100.0,
                       end: float | None = None) -> MetricReport:
    """Full metric report for one candidate against a ground-truth alignment.

    Temporal metrics integrate up to ``end`` (default: the last onset of
    ``score_notes``, or of the roll if there are no notes).
    """
    if end is None and len(score_notes):
        end = float(score_notes.onsets.max())
    corr = correspond_notes(score_notes, ground_truth, transcript_notes, window_ms)
    if corr.n_matched:
        pairs = corr.pairs(candidate)
        nm, nr, rr = note_mad(pairs), note_rmse(pairs), recognition_rate(pairs, threshold_ms)
    else:
        nm = nr = rr = float("nan")
    return MetricReport(
        mad_ms=temporal_mad(candidate, ground_truth, score, end),
        rmse_ms=temporal_rmse(candidate, ground_truth, score, end),
        note_mad_ms=nm,
        note_rmse_ms=nr,
        recognition_rate=rr,
        matched_fraction=corr.matched_fraction,
        n_notes=corr.n_notes,
        n_matched=corr.n_matched,
        threshold_ms=threshold_ms,
    )
