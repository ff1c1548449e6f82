"""One score/performance pair through ground truth, baseline alignment and evaluation.

These functions back the command-line tool and batch runs.  Each pair is
independent, so batches fan out over a thread pool capped by the
``ALIGN_EVAL_THREADS`` environment variable.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alignment import AlignmentFn, apply
from .features import FEATURE_KINDS, HOP, Waveform, align_baseline, synthesize
from .groundtruth import GtConfig, GtResult, tempo_regularized_align
from .io import read_report_json, read_wav, write_alignment, write_report_json
from .metrics import MetricReport, evaluate_alignment, pearson
from .midi import MidiIngestConfig, ingest_midi
from .pianoroll import NoteList, from_notes

THREADS_ENV = "ALIGN_EVAL_THREADS"


def max_workers(default: int | None = None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return default or min(8, os.cpu_count() or 1)


def load_score(path, pedal_mode: str = "ignore") -> NoteList:
    return ingest_midi(path, MidiIngestConfig(axis="score", pedal_mode=pedal_mode))


def load_transcript(path, pedal_mode: str = "ignore") -> NoteList:
    return ingest_midi(path, MidiIngestConfig(axis="performance", pedal_mode=pedal_mode))


def ground_truth(score: NoteList, transcript: NoteList, cfg: GtConfig = GtConfig()) -> GtResult:
    if len(score) == 0 or len(transcript) == 0:
        raise ValueError("score and transcript both need at least one note")
    return tempo_regularized_align(from_notes(score), from_notes(transcript), cfg)


def gt_summary(res: GtResult) -> dict:
    return {"data_cost": res.data_cost, "reg_cost": res.reg_cost, "total": res.total,
            "lambda": res.lam}


def baseline(score: NoteList, performance: Waveform, feature: str,
             score_tempo: float | None = None, hop: int = HOP) -> AlignmentFn:
    if feature not in FEATURE_KINDS:
        raise ValueError(f"unknown feature kind {feature!r}; expected one of {FEATURE_KINDS}")
    return align_baseline(score, performance, feature, score_tempo, hop)


def evaluate(score: NoteList, transcript: NoteList, gt: AlignmentFn, cand: AlignmentFn,
             threshold_ms: float = 50.0, window_ms: float = 100.0) -> MetricReport:
    for name, a in (("ground truth", gt), ("candidate", cand)):
        if a.S != score.duration:
            raise ValueError(f"{name} alignment covers {a.S} beats but the score spans "
                             f"{score.duration}")
    roll = from_notes(score)
    return evaluate_alignment(cand, gt, roll, score, transcript, threshold_ms, window_ms)


def aligned_score(score: NoteList, alignment: AlignmentFn):
    return apply(alignment, from_notes(score))


@dataclass(frozen=True)
class RunManifest:
    """Inputs and output locations for one score/performance pair."""

    pair_id: str
    score: Path
    transcript: Path
    performance: Path | None = None  # WAV; synthesized from the transcript when absent
    feature: str = "chroma"
    gt_config: GtConfig = field(default_factory=GtConfig)
    out_dir: Path = Path(".")

    def __post_init__(self):
        for name in ("score", "transcript", "out_dir"):
            object.__setattr__(self, name, Path(getattr(self, name)))
        if self.performance is not None:
            object.__setattr__(self, "performance", Path(self.performance))
        if self.feature not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.feature!r}")

    @property
    def gt_path(self) -> Path:
        return self.out_dir / f"{self.pair_id}.gt.json"

    @property
    def cand_path(self) -> Path:
        return self.out_dir / f"{self.pair_id}.{self.feature}.cand.json"

    @property
    def report_path(self) -> Path:
        return self.out_dir / f"{self.pair_id}.{self.feature}.report.json"

    def check_inputs(self):
        for p in (self.score, self.transcript, self.performance):
            if p is not None and not p.is_file():
                raise FileNotFoundError(f"pair {self.pair_id}: missing input {p}")

    @classmethod
    def from_dict(cls, doc: dict, base: Path = Path(".")) -> "RunManifest":
        gt = doc.get("gt_config", {})
        cfg = GtConfig(lam=gt.get("lambda", 0.1), dt=gt.get("dt", 0.01), ds=gt.get("ds"),
                       band=gt.get("band"))
        perf = doc.get("performance")
        return cls(pair_id=str(doc["pair_id"]), score=base / doc["score"],
                   transcript=base / doc["transcript"],
                   performance=base / perf if perf else None,
                   feature=doc.get("feature", "chroma"), gt_config=cfg,
                   out_dir=base / doc.get("out_dir", "."))


def load_manifests(path) -> list[RunManifest]:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    entries = doc["pairs"] if isinstance(doc, dict) else doc
    return [RunManifest.from_dict(e, path.parent) for e in entries]


def run_pair(m: RunManifest) -> MetricReport:
    """Ground truth, baseline alignment and metric report for one pair; writes all three files."""
    m.check_inputs()
    m.out_dir.mkdir(parents=True, exist_ok=True)
    score, transcript = load_score(m.score), load_transcript(m.transcript)
    res = ground_truth(score, transcript, m.gt_config)
    write_alignment(m.gt_path, res.alignment, {"summary": gt_summary(res)})
    wav = read_wav(m.performance) if m.performance else synthesize(transcript,
                                                                   duration=transcript.duration)
    cand = baseline(score, wav, m.feature)
    write_alignment(m.cand_path, cand, {"feature": m.feature})
    report = evaluate(score, transcript, res.alignment, cand)
    write_report_json(m.report_path, report, m.pair_id, m.feature)
    return report


def run_batch(manifests: list[RunManifest]) -> list[MetricReport]:
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        return list(pool.map(run_pair, manifests))


# -- aggregation ----------------------------------------------------------------

METRIC_COLUMNS = ("mad_ms", "rmse_ms", "note_mad_ms", "note_rmse_ms", "recognition_rate_50ms",
                  "matched_fraction")
CORRELATION_PAIRS = (("mad_ms", "note_mad_ms"), ("rmse_ms", "note_rmse_ms"),
                     ("mad_ms", "recognition_rate_50ms"))


def collect_reports(directory) -> list[dict]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    rows = []
    candidates = sorted(directory.rglob("*.json"))
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        for row in pool.map(_try_report, candidates):
            if row is not None:
                rows.append(row)
    rows.sort(key=lambda r: (r["pair_id"], r["feature"]))
    return rows


def _try_report(path):
    try:
        return read_report_json(path)
    except (ValueError, json.JSONDecodeError):
        return None


def exclude_outliers(rows: list[dict], mad_ms: float | None) -> tuple[list[dict], list[dict]]:
    if mad_ms is None:
        return rows, []
    kept = [r for r in rows if not r["mad_ms"] > mad_ms]
    dropped = [r for r in rows if r["mad_ms"] > mad_ms]
    return kept, dropped


def _by_feature(rows):
    groups: dict[str, list[dict]] = {}
    for r in rows:
        groups.setdefault(r["feature"], []).append(r)
    return groups


def feature_means(rows: list[dict]) -> list[dict]:
    """Average of every metric per feature kind (NaN entries skipped)."""
    out = []
    for feat, group in sorted(_by_feature(rows).items()):
        row = {"feature": feat, "n": len(group)}
        for c in METRIC_COLUMNS:
            vals = np.array([g[c] for g in group], dtype=float)
            vals = vals[np.isfinite(vals)]
            row[c] = float(vals.mean()) if len(vals) else float("nan")
        out.append(row)
    return out


def feature_correlations(rows: list[dict]) -> list[dict]:
    """Pearson correlation between temporal and note-based metrics, per feature kind."""
    out = []
    for feat, group in sorted(_by_feature(rows).items()):
        row = {"feature": feat, "n": len(group)}
        for a, b in CORRELATION_PAIRS:
            x = np.array([g[a] for g in group], dtype=float)
            y = np.array([g[b] for g in group], dtype=float)
            ok = np.isfinite(x) & np.isfinite(y)
            try:
                row[f"{a}~{b}"] = pearson(x[ok], y[ok])
            except ValueError:
                row[f"{a}~{b}"] = float("nan")
        out.append(row)
    return out
