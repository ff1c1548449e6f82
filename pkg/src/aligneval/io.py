"""Alignment, report and audio files.

Every writer goes through :func:`atomic_path`: output lands in a temporary
file in the destination directory and is renamed into place only once it
is complete.
"""

from __future__ import annotations

import contextlib
import csv
import json
import math
import os
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .alignment import AlignmentFn
from .features import Waveform
from .metrics import MetricReport
from .pianoroll import PERFORMANCE_AXIS, SCORE_AXIS

UNITS = {"score": SCORE_AXIS, "performance": PERFORMANCE_AXIS}

REPORT_COLUMNS = ("pair_id", "feature", "mad_ms", "rmse_ms", "note_mad_ms", "note_rmse_ms",
                  "recognition_rate_50ms", "matched_fraction")


@contextlib.contextmanager
def atomic_path(path):
    """Yield a temporary sibling of ``path``; rename it over ``path`` on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    os.close(fd)
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(tmp, 0o666 & ~umask)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_text(path, text: str) -> Path:
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")
    return Path(path)


# -- alignments ---------------------------------------------------------------

def alignment_to_dict(a: AlignmentFn) -> dict:
    return {"units": dict(UNITS), "S": float(a.S), "T": float(a.T),
            "knots": [[float(s), float(t)] for s, t in zip(a.s, a.t)]}


def alignment_from_dict(doc: dict) -> AlignmentFn:
    if not isinstance(doc, dict):
        raise ValueError("alignment document must be a JSON object")
    missing = {"units", "S", "T", "knots"} - doc.keys()
    if missing:
        raise ValueError(f"alignment document lacks {sorted(missing)}")
    if doc["units"] != UNITS:
        raise ValueError(f"unexpected units {doc['units']!r}; expected {UNITS}")
    knots = doc["knots"]
    if not isinstance(knots, list) or not knots:
        raise ValueError("alignment has no knots")
    for k in knots:
        if not (isinstance(k, list) and len(k) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in k)):
            raise ValueError(f"malformed knot {k!r}")
    return AlignmentFn([tuple(k) for k in knots], doc["S"], doc["T"])


def write_alignment(path, a: AlignmentFn, extra: dict | None = None) -> Path:
    """JSON alignment file; ``extra`` keys (e.g. a cost summary) ride along."""
    doc = alignment_to_dict(a)
    if extra:
        doc.update({k: v for k, v in extra.items() if k not in doc})
    # repr-exact floats: json writes the shortest round-tripping form
    return write_text(path, json.dumps(doc, indent=1) + "\n")


def read_alignment_document(path) -> tuple[AlignmentFn, dict]:
    """The alignment in ``path`` together with the raw document (extra keys included)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return alignment_from_dict(doc), doc
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def read_alignment(path) -> AlignmentFn:
    return read_alignment_document(path)[0]


# -- reports ------------------------------------------------------------------

def report_row(report: MetricReport, pair_id: str, feature: str) -> dict:
    return {"pair_id": pair_id, "feature": feature, "mad_ms": report.mad_ms,
            "rmse_ms": report.rmse_ms, "note_mad_ms": report.note_mad_ms,
            "note_rmse_ms": report.note_rmse_ms,
            "recognition_rate_50ms": report.recognition_rate,
            "matched_fraction": report.matched_fraction}


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_report_json(path, report: MetricReport, pair_id: str = "", feature: str = "") -> Path:
    doc = {"pair_id": pair_id, "feature": feature}
    doc.update({k: _json_safe(v) for k, v in report.to_dict().items()})
    return write_text(path, json.dumps(doc, indent=1) + "\n")


def read_report_json(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "mad_ms" not in doc:
        raise ValueError(f"{path} is not a metric report")
    row = {c: doc.get(c) for c in REPORT_COLUMNS if c != "recognition_rate_50ms"}
    row["recognition_rate_50ms"] = doc.get("recognition_rate")
    for k in REPORT_COLUMNS[2:]:
        row[k] = float("nan") if row[k] is None else float(row[k])
    row["pair_id"] = str(row["pair_id"] or Path(path).stem)
    row["feature"] = str(row["feature"] or "")
    return row


def write_rows_csv(path, rows, columns=REPORT_COLUMNS) -> Path:
    buf = StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({c: _csv_value(r.get(c)) for c in columns})
    return write_text(path, buf.getvalue())


def append_row_csv(path, row: dict, columns=REPORT_COLUMNS) -> Path:
    """Append one row, writing the header first if the file is new or empty."""
    path = Path(path)
    rows = read_rows_csv(path) if path.exists() and path.stat().st_size else []
    rows.append(row)
    return write_rows_csv(path, rows, columns)


def read_rows_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _csv_value(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return "" if x is None else x


# -- audio --------------------------------------------------------------------

def read_wav(path) -> Waveform:
    """Single-channel WAV as float samples in [-1, 1]."""
    try:
        sr, data = wavfile.read(str(path))
    except ValueError as exc:
        raise ValueError(f"unreadable WAV file {path}: {exc}") from exc
    if data.ndim != 1:
        raise ValueError(f"{path} has {data.shape[1]} channels; expected one")
    if np.issubdtype(data.dtype, np.integer):
        info = np.iinfo(data.dtype)
        if info.min == 0:  # 8-bit WAV is unsigned
            x = (data.astype(np.float64) - 128.0) / 128.0
        else:
            x = data.astype(np.float64) / -float(info.min)
    else:
        x = data.astype(np.float64)
    return Waveform(x, int(sr))


def write_wav(path, w: Waveform) -> Path:
    """16-bit PCM, scaled like :func:`read_wav` so a round trip is off by at most half a step."""
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype(np.int16)
    path = Path(path)
    with atomic_path(path) as tmp:
        wavfile.write(str(tmp), w.sample_rate, pcm)
    return path
