"""Evaluation toolkit for score-to-performance temporal alignment.

Piano-rolls and alignment functions, closed-form temporal metrics,
note-based metrics, tempo-regularized ground-truth alignments, feature-DTW
audio baselines, and the file formats and command-line tool around them.
"""

from .alignment import (AlignmentFn, WarpPath, apply, evaluate_at, from_path,
                        identity_alignment, inverse_tempo_variance, linearize,
                        mean_inverse_tempo, pscore_at, warp_onsets)
from .estimators import ClassicalDTWAligner, FeatureDTWAligner, TempoRegularizedAligner
from .features import (FeatureSequence, Waveform, align_baseline, cost_matrix, cqt,
                       feature_dtw, featurize, log_chromagram, log_spectrogram, synthesize)
from .groundtruth import (GtConfig, GtResult, classical_dtw, segment_prefix_table,
                          tempo_regularized_align)
from .io import read_alignment, read_wav, write_alignment, write_wav
from .metrics import (Correspondence, MetricReport, OnsetPairs, correspond_notes,
                      evaluate_alignment, note_mad, note_rmse, pearson, recognition_rate,
                      temporal_mad, temporal_rmse)
from .midi import MidiIngestConfig, ingest_midi, write_midi
from .pianoroll import (NoteEvent, NoteList, PianoRoll, frame_matrix, from_notes,
                        l1_distance, sample)
from .pipeline import RunManifest
from .plots import render_comparison_svg, render_scatter_svg
from .warps import synthetic_warp, warp_notes

__version__ = "0.1.0"
