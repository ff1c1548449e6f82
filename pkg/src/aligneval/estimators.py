"""Estimator-style wrappers around the aligners.

``fit(score, performance)`` computes an alignment and stores it as
``alignment_``; ``predict(s)`` evaluates it at score positions and
``transform(score_roll)`` returns the performance-aligned score.  The
hyper-parameters live in ``__init__`` so ``get_params``/``set_params`` and
``sklearn.base.clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .alignment import AlignmentFn, apply, evaluate_at
from .features import FEATURE_KINDS, HOP, Waveform, align_baseline
from .groundtruth import GtConfig, classical_dtw, tempo_regularized_align
from .pianoroll import NoteList, PianoRoll, from_notes


def _as_roll(x) -> PianoRoll:
    if isinstance(x, PianoRoll):
        return x
    if isinstance(x, NoteList):
        return from_notes(x)
    raise TypeError(f"expected a PianoRoll or NoteList, got {type(x).__name__}")


class _AlignerMixin:
    def predict(self, s) -> np.ndarray:
        """Performance times of score positions ``s``."""
        check_is_fitted(self, "alignment_")
        return np.asarray(evaluate_at(self.alignment_, np.asarray(s, dtype=float)))

    def transform(self, score) -> PianoRoll:
        """Performance-aligned score of ``score`` under the fitted alignment."""
        check_is_fitted(self, "alignment_")
        return apply(self.alignment_, _as_roll(score))

    def fit_transform(self, score, performance) -> PianoRoll:
        return self.fit(score, performance).transform(score)


class TempoRegularizedAligner(_AlignerMixin, BaseEstimator):
    """Ground-truth style aligner: roll distance plus a tempo-variance penalty."""

    def __init__(self, lam: float = 0.1, dt: float = 0.01, band: int | None = None):
        self.lam = lam
        self.dt = dt
        self.band = band

    def fit(self, score, transcript) -> "TempoRegularizedAligner":
        res = tempo_regularized_align(_as_roll(score), _as_roll(transcript),
                                      GtConfig(lam=self.lam, dt=self.dt, band=self.band))
        self.alignment_: AlignmentFn = res.alignment
        self.data_cost_ = res.data_cost
        self.reg_cost_ = res.reg_cost
        self.objective_ = res.total
        return self


class ClassicalDTWAligner(_AlignerMixin, BaseEstimator):
    """Frame-level DTW on discretized rolls, with no tempo term."""

    def __init__(self, dt: float = 0.01, ds: float | None = None):
        self.dt = dt
        self.ds = ds

    def fit(self, score, transcript) -> "ClassicalDTWAligner":
        res = classical_dtw(_as_roll(score), _as_roll(transcript),
                            GtConfig(lam=0.0, dt=self.dt, ds=self.ds))
        self.alignment_ = res.alignment
        self.data_cost_ = res.data_cost
        self.reg_cost_ = res.reg_cost
        return self


class FeatureDTWAligner(_AlignerMixin, BaseEstimator):
    """Audio baseline: DTW between features of a synthesized score and a recording."""

    def __init__(self, features: str = "chroma", score_tempo: float | None = None, hop: int = HOP):
        self.features = features
        self.score_tempo = score_tempo
        self.hop = hop

    def fit(self, score_notes: NoteList, performance: Waveform) -> "FeatureDTWAligner":
        if self.features not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.features!r}")
        if not isinstance(score_notes, NoteList) or not isinstance(performance, Waveform):
            raise TypeError("fit expects a score NoteList and a performance Waveform")
        self.alignment_ = align_baseline(score_notes, performance, self.features,
                                         self.score_tempo, self.hop)
        return self
