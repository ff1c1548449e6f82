"""Feature-based DTW baselines: synthesize the score, featurize both signals, warp.

Three featurizations share one STFT pipeline: a log-compressed magnitude
spectrogram, a 12-bin chromagram folded from it, and a constant-Q style
filterbank pooled from STFT magnitudes.  Frames are centred (the signal is
zero-padded by half a window on each side), so frame ``i`` sits at
``i * hop / sample_rate`` seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .alignment import AlignmentFn, WarpPath, from_path
from .dtw import dtw
from .pianoroll import PERFORMANCE_AXIS, NoteEvent, NoteList

SAMPLE_RATE = 44100
HOP = 512
WIN = 2048
CQT_WIN = 8192
LOG_GAIN = 100.0

N_HARMONICS = 6
DECAY = 0.3
RAMP = 0.005
PEAK = 0.9

FEATURE_KINDS = ("spec", "chroma", "cqt")


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("waveform contains non-finite samples")
        if not self.sample_rate > 0:
            raise ValueError("sample rate must be positive")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FeatureSequence:
    frames: np.ndarray  # (D, F)
    hop: int
    sample_rate: int
    kind: str
    win: int = WIN

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    @property
    def frame_period(self) -> float:
        return self.hop / self.sample_rate


def midi_to_hz(pitch) -> np.ndarray:
    return 440.0 * 2.0 ** ((np.asarray(pitch, dtype=float) - 69.0) / 12.0)


def note_waveform(pitch: int, duration: float, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """One note from its onset to the end of its release ramp."""
    n_on = int(round(duration * sample_rate))
    n_rel = int(round(RAMP * sample_rate))
    t = np.arange(n_on + n_rel) / sample_rate
    f0 = float(midi_to_hz(pitch))
    tone = np.zeros_like(t)
    for h in range(1, N_HARMONICS + 1):
        if h * f0 >= sample_rate / 2:
            break
        tone += 0.5 ** (h - 1) * np.sin(2 * np.pi * h * f0 * t)
    env = np.minimum(1.0, t / RAMP) * np.exp(-t / DECAY)
    if n_rel:
        release = 1.0 - (np.arange(n_rel) + 1) / n_rel
        env[n_on:] = env[n_on - 1 if n_on else 0] * release
    return tone * env


def synthesize(notes: NoteList, sample_rate: int = SAMPLE_RATE, normalize: bool = True,
               duration: float | None = None) -> Waveform:
    """Additive rendering of timed notes: six decaying harmonics per note.

    The output covers ``[0, duration)`` (default: last offset plus the
    release ramp) and is scaled to a peak of 0.9 unless ``normalize`` is off.
    """
    if len(notes) == 0:
        raise ValueError("nothing to synthesize: empty note list")
    if duration is None:
        duration = max(n.offset for n in notes) + RAMP
    n_total = int(round(duration * sample_rate))
    out = np.zeros(n_total)
    for n in notes:
        start = int(round(n.onset * sample_rate))
        if start >= n_total:
            continue
        wave = note_waveform(n.pitch, n.offset - n.onset, sample_rate)
        stop = min(n_total, start + len(wave))
        out[start:stop] += wave[:stop - start]
    if normalize:
        peak = np.max(np.abs(out))
        if peak > 0:
            out *= PEAK / peak
    return Waveform(out, sample_rate)


def _frames(w: Waveform, win: int, hop: int, center: bool) -> np.ndarray:
    x = w.samples
    if center:
        x = np.pad(x, (win // 2, win // 2))
    if len(x) < win:
        raise ValueError(f"signal of {len(x)} samples is shorter than the {win}-sample window")
    return sliding_window_view(x, win)[::hop]


def stft_magnitude(w: Waveform, win: int = WIN, hop: int = HOP, center: bool = True) -> np.ndarray:
    """``(win // 2 + 1, F)`` Hann-windowed STFT magnitudes."""
    frames = _frames(w, win, hop, center)
    window = np.hanning(win + 1)[:-1]
    return np.abs(np.fft.rfft(frames * window, axis=1)).T


def log_spectrogram(w: Waveform, win: int = WIN, hop: int = HOP,
                    center: bool = True) -> FeatureSequence:
    mag = stft_magnitude(w, win, hop, center)
    return FeatureSequence(np.log1p(LOG_GAIN * mag), hop, w.sample_rate, "spec", win)


def _l2_normalize(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=0, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def chroma_map(n_bins: int, win: int, sample_rate: int) -> np.ndarray:
    """Pitch class of each STFT bin, ``-1`` for bins below 27.5 Hz."""
    freqs = np.arange(n_bins) * sample_rate / win
    classes = np.full(n_bins, -1)
    ok = freqs >= 27.5
    classes[ok] = np.mod(np.round(12 * np.log2(freqs[ok] / 440.0) + 69).astype(int), 12)
    return classes


def log_chromagram(spec: FeatureSequence) -> FeatureSequence:
    """Fold a log-spectrogram into 12 pitch classes, L2-normalized per frame.

    The log compression is undone first so that bin energies ``|X|**2``
    are what gets summed; summing the compressed values instead lets
    leakage bins swamp the class of the fundamental.
    """
    if spec.kind != "spec":
        raise ValueError(f"chromagram needs a log-spectrogram, got {spec.kind!r}")
    classes = chroma_map(spec.frames.shape[0], spec.win, spec.sample_rate)
    energy = (np.expm1(spec.frames) / LOG_GAIN) ** 2
    chroma = np.zeros((12, spec.n_frames))
    for c in range(12):
        chroma[c] = energy[classes == c].sum(axis=0)
    return FeatureSequence(_l2_normalize(chroma), spec.hop, spec.sample_rate, "chroma", spec.win)


def cqt_filterbank(n_fft_bins: int, win: int, sample_rate: int, fmin: float = 32.7,
                   n_bins: int = 72, bins_per_octave: int = 12) -> np.ndarray:
    """Triangular bands centred at ``fmin * 2**(k / bins_per_octave)``.

    Each band rises from the previous centre and falls to the next one.  A
    band too narrow to contain any STFT bin falls back to linear
    interpolation between the two bins around its centre.
    """
    freqs = np.arange(n_fft_bins) * sample_rate / win
    k = np.arange(-1, n_bins + 1)
    centres = fmin * 2.0 ** (k / bins_per_octave)
    fb = np.zeros((n_bins, n_fft_bins))
    for b in range(n_bins):
        lo, mid, hi = centres[b], centres[b + 1], centres[b + 2]
        rise = (freqs - lo) / (mid - lo)
        fall = (hi - freqs) / (hi - mid)
        fb[b] = np.clip(np.minimum(rise, fall), 0, None)
        if not fb[b].any():
            pos = mid * win / sample_rate
            j = int(np.floor(pos))
            if j + 1 < n_fft_bins:
                fb[b, j] = 1 - (pos - j)
                fb[b, j + 1] = pos - j
    return fb


def cqt(w: Waveform, bins_per_octave: int = 12, fmin: float = 32.7, n_bins: int = 72,
        hop: int = HOP, win: int = CQT_WIN, center: bool = True) -> FeatureSequence:
    """Log-frequency filterbank features pooled from STFT magnitudes."""
    mag = stft_magnitude(w, win, hop, center)
    fb = cqt_filterbank(mag.shape[0], win, w.sample_rate, fmin, n_bins, bins_per_octave)
    bands = np.log1p(LOG_GAIN * (fb @ mag))
    return FeatureSequence(_l2_normalize(bands), hop, w.sample_rate, "cqt", win)


def featurize(w: Waveform, kind: str, hop: int = HOP) -> FeatureSequence:
    if kind == "spec":
        return log_spectrogram(w, hop=hop)
    if kind == "chroma":
        return log_chromagram(log_spectrogram(w, hop=hop))
    if kind == "cqt":
        return cqt(w, hop=hop)
    raise ValueError(f"unknown feature kind {kind!r}; expected one of {FEATURE_KINDS}")


def cost_matrix(a: FeatureSequence, b: FeatureSequence) -> np.ndarray:
    """Cosine distance between every pair of frames.

    A zero frame is at distance 1 from any non-zero frame and 0 from
    another zero frame.
    """
    if a.kind != b.kind or a.frames.shape[0] != b.frames.shape[0]:
        raise ValueError("feature sequences differ in kind or dimension")
    A, B = a.frames, b.frames
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    An = np.divide(A, na, out=np.zeros_like(A), where=na > 0)
    Bn = np.divide(B, nb, out=np.zeros_like(B), where=nb > 0)
    C = 1.0 - An.T @ Bn
    both_zero = (na == 0)[:, None] & (nb == 0)[None, :]
    C[both_zero] = 0.0
    return np.clip(C, 0.0, 2.0)


def feature_dtw(C: np.ndarray, ds: float = 1.0, dt: float = 1.0) -> WarpPath:
    steps, _ = dtw(C)
    return WarpPath(steps, ds, dt)


def render_score(score_notes: NoteList, score_tempo: float, sample_rate: int = SAMPLE_RATE) -> Waveform:
    """Uniform-tempo rendering of a score, exactly ``S * score_tempo`` seconds long."""
    seconds = NoteList((NoteEvent(n.onset * score_tempo, n.pitch, n.offset * score_tempo)
                        for n in score_notes), score_notes.duration * score_tempo,
                       PERFORMANCE_AXIS)
    return synthesize(seconds, sample_rate, duration=seconds.duration)


def align_baseline(score_notes: NoteList, perf_wav: Waveform, feature_kind: str = "chroma",
                   score_tempo: float | None = None, hop: int = HOP) -> AlignmentFn:
    """Candidate alignment by DTW between a synthesized score and a performance recording.

    ``score_tempo`` (seconds per beat) defaults to the mean tempo ``T / S``.
    """
    if len(score_notes) == 0:
        raise ValueError("score has no notes")
    S, T = score_notes.duration, perf_wav.duration
    if score_tempo is None:
        score_tempo = T / S
    rendered = render_score(score_notes, score_tempo, perf_wav.sample_rate)
    fa = featurize(rendered, feature_kind, hop)
    fb = featurize(perf_wav, feature_kind, hop)
    period = hop / perf_wav.sample_rate
    path = feature_dtw(cost_matrix(fa, fb), period / score_tempo, period)
    return from_path(path, S, T)
