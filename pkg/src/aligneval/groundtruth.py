"""Approximate ground-truth alignments between a score and a symbolic performance.

The target is the alignment whose performance-aligned score best matches
the transcript in L1 distance, regularized towards a uniform tempo:

    d1(pscore_tau, transcript) + lam * R(tau)

where ``R`` is the score-time average of ``(tau'(s) - T/S)**2``.  Because
the mean inverse-tempo ``T/S`` does not depend on the path, the objective
decomposes over score segments and is solved exactly on a frame grid by a
dynamic program over (score changepoint, performance frame) states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .alignment import (AlignmentFn, WarpPath, from_path, inverse_tempo_variance,
                        linearize)
from .dtw import dtw
from .pianoroll import PianoRoll, frame_matrix, segment_bool_matrix


@dataclass(frozen=True)
class GtConfig:
    lam: float = 0.1
    dt: float = 0.01
    ds: float | None = None
    band: int | None = None

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.ds is not None and not self.ds > 0:
            raise ValueError(f"ds must be positive, got {self.ds}")
        if self.band is not None and self.band < 0:
            raise ValueError("band half-width must be non-negative")


@dataclass(frozen=True)
class GtResult:
    alignment: AlignmentFn
    data_cost: float
    reg_cost: float
    total: float
    lam: float
    pruned: bool = False
    path: np.ndarray | None = None


def frame_grid(duration: float, step: float) -> tuple[int, float]:
    """Number of frames and the adjusted step that tiles ``[0, duration)`` exactly."""
    n = max(1, int(round(duration / step)))
    return n, duration / n


def _check_pair(score: PianoRoll, transcript: PianoRoll):
    if score.n_pitches != transcript.n_pitches:
        raise ValueError("score and transcript use different pitch ranges")


def frame_mismatch(score: PianoRoll, transcript: PianoRoll, n_frames: int) -> np.ndarray:
    """``(K, n_frames)`` exact mismatch integrals.

    Entry ``(i, k)`` is the integral over performance frame ``k`` of the
    number of pitches that differ between score segment ``i`` and the
    transcript.
    """
    _check_pair(score, transcript)
    T = transcript.duration
    edges = np.arange(n_frames + 1) * (T / n_frames)
    edges[-1] = T
    cuts = np.union1d(edges, np.asarray(transcript.changepoints, dtype=float))
    cuts = cuts[cuts <= T]
    lengths = np.diff(cuts)
    starts = cuts[:-1]
    piece_seg = np.searchsorted(transcript.boundaries, starts, side="right") - 1
    piece_frame = np.minimum(np.searchsorted(edges, starts, side="right") - 1, n_frames - 1)

    X = segment_bool_matrix(transcript).astype(np.float64)[piece_seg]
    Sb = segment_bool_matrix(score).astype(np.float64)
    overlap = Sb @ X.T
    diff = Sb.sum(axis=1)[:, None] + X.sum(axis=1)[None, :] - 2.0 * overlap
    weighted = diff * lengths[None, :]
    out = np.zeros((len(score.segments), n_frames))
    np.add.at(out.T, piece_frame, weighted.T)
    return out


def segment_prefix_table(score: PianoRoll, transcript: PianoRoll, dt: float,
                         exact: bool = True) -> np.ndarray:
    """Prefix sums of per-frame mismatch, one row per score segment.

    ``table[i, j]`` is the mismatch accumulated by segment ``i`` over frames
    ``0..j-1``, so the cost of stretching segment ``i`` over frames
    ``[j, j')`` is ``table[i, j'] - table[i, j]``.  With ``exact=False`` each
    frame is represented by its left-edge sample instead of its integral.
    """
    n_frames, step = frame_grid(transcript.duration, dt)
    if exact:
        per_frame = frame_mismatch(score, transcript, n_frames)
    else:
        A = segment_bool_matrix(score).astype(np.int64)
        B = frame_matrix(transcript, step)[:, :n_frames].astype(np.int64)
        per_frame = (A.sum(1)[:, None] + B.sum(0)[None, :] - 2 * A @ B) * step
    table = np.zeros((per_frame.shape[0], n_frames + 1))
    np.cumsum(per_frame, axis=1, out=table[:, 1:])
    return table


@njit(cache=True)
def _regularized_dp(prefix, widths, step, T, S, lam, lo, hi):
    K = prefix.shape[0]
    M1 = prefix.shape[1]
    rho = T / S
    D = np.full((K + 1, M1), np.inf)
    back = np.full((K + 1, M1), -1, dtype=np.int32)
    D[0, 0] = 0.0
    for i in range(K):
        h = widths[i]
        for jp in range(lo[i + 1], hi[i + 1] + 1):
            best = np.inf
            arg = -1
            pjp = prefix[i, jp]
            top = jp if jp < hi[i] else hi[i]
            for j in range(lo[i], top + 1):
                d = D[i, j]
                if d == np.inf:
                    continue
                dev = (jp - j) * step / h - rho
                c = d + (pjp - prefix[i, j]) / T + lam * (dev * dev * h) / S
                if c < best:
                    best = c
                    arg = j
            D[i + 1, jp] = best
            back[i + 1, jp] = arg
    return D, back


def _band_limits(knot_pos: np.ndarray, S: float, n_frames: int, step: float,
                 band: int | None) -> tuple[np.ndarray, np.ndarray]:
    K = len(knot_pos) - 1
    if band is None:
        lo = np.zeros(K + 1, dtype=np.int64)
        hi = np.full(K + 1, n_frames, dtype=np.int64)
    else:
        centre = knot_pos / S * n_frames
        lo = np.clip(np.floor(centre - band), 0, n_frames).astype(np.int64)
        hi = np.clip(np.ceil(centre + band), 0, n_frames).astype(np.int64)
    lo[0] = hi[0] = 0
    lo[-1] = hi[-1] = n_frames
    return lo, hi


def regularization(alignment: AlignmentFn, score: PianoRoll) -> float:
    """Inverse-tempo variance of the alignment linearized at the score changepoints."""
    return inverse_tempo_variance(linearize(alignment, score.changepoints))


def tempo_regularized_align(score: PianoRoll, transcript: PianoRoll,
                            cfg: GtConfig = GtConfig()) -> GtResult:
    """Exact grid minimizer of ``d1 + lam * R`` with endpoints pinned to (0, 0) and (S, T).

    Knots sit on score changepoints and on performance frame edges; each
    score segment is stretched linearly over a whole number of frames
    (possibly zero, which collapses the segment to an instant).
    """
    _check_pair(score, transcript)
    S, T = score.duration, transcript.duration
    knot_pos = score.boundaries
    widths = np.diff(knot_pos)
    n_frames, step = frame_grid(T, cfg.dt)
    prefix = segment_prefix_table(score, transcript, cfg.dt)
    lo, hi = _band_limits(knot_pos, S, n_frames, step, cfg.band)

    D, back = _regularized_dp(prefix, widths, step, T, S, float(cfg.lam), lo, hi)
    K = len(widths)
    if not np.isfinite(D[K, n_frames]):
        raise RuntimeError("no feasible alignment inside the band")
    frames = np.empty(K + 1, dtype=np.int64)
    frames[K] = n_frames
    for i in range(K, 0, -1):
        frames[i - 1] = back[i, frames[i]]
    # frame edges at n_frames are T exactly, not n_frames * step
    times = np.where(frames == n_frames, T, frames * step)

    data = float(np.sum(prefix[np.arange(K), frames[1:]] - prefix[np.arange(K), frames[:-1]]) / T)
    dev = (np.diff(times) / widths) - T / S
    reg = float(np.sum(dev * dev * widths) / S)
    alignment = AlignmentFn(zip(knot_pos, times), S, T)
    return GtResult(alignment, data, reg, data + cfg.lam * reg, cfg.lam,
                    pruned=cfg.band is not None, path=frames)


def classical_dtw(score: PianoRoll, transcript: PianoRoll,
                  cfg: GtConfig = GtConfig(lam=0.0)) -> GtResult:
    """Frame-level DTW minimizing the discretized L1 roll distance (no tempo term).

    Score frames have width ``cfg.ds`` beats (default: ``cfg.dt`` scaled by
    the mean tempo) and transcript frames width ``cfg.dt`` seconds; both
    are adjusted to tile their axes exactly.
    """
    _check_pair(score, transcript)
    S, T = score.duration, transcript.duration
    ds = cfg.ds if cfg.ds is not None else cfg.dt * S / T
    n_s, ds = frame_grid(S, ds)
    n_t, dt = frame_grid(T, cfg.dt)
    A = frame_matrix(score, ds)[:, :n_s].astype(np.int64)
    B = frame_matrix(transcript, dt)[:, :n_t].astype(np.int64)
    C = (A.sum(0)[:, None] + B.sum(0)[None, :] - 2 * A.T @ B) * (dt / T)
    steps, cost = dtw(C)
    alignment = from_path(WarpPath(steps, ds, dt), S, T)
    reg = regularization(alignment, score)
    return GtResult(alignment, cost, reg, cost, 0.0, path=steps)
