"""Plain SVG figures: piano-roll comparisons and metric scatter plots.

The SVG is written by hand so the output is small, deterministic and easy
to inspect in tests (every drawn note carries a ``class`` attribute).
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .io import write_text
from .metrics import pearson
from .pianoroll import PianoRoll, pitches_from_mask

COLORS = {"note": "#3b5b92", "pscore": "#d62728", "transcript": "#e8c30c", "both": "#9a9a9a"}

PANEL_H = 220
MARGIN_L, MARGIN_R, MARGIN_T, GAP = 60, 20, 30, 40
WIDTH = 900


def _runs(roll_cuts: np.ndarray, labels: list[dict[int, str]]) -> list[tuple[float, float, int, str]]:
    """Merge consecutive elementary intervals carrying the same label for a pitch."""
    out = []
    open_runs: dict[int, tuple[float, str]] = {}
    for k, lab in enumerate(labels):
        t0 = roll_cuts[k]
        for p in list(open_runs):
            start, kind = open_runs[p]
            if lab.get(p) != kind:
                out.append((start, t0, p, kind))
                del open_runs[p]
        for p, kind in lab.items():
            if p not in open_runs:
                open_runs[p] = (t0, kind)
    end = roll_cuts[-1]
    for p, (start, kind) in open_runs.items():
        out.append((start, end, p, kind))
    return sorted(out, key=lambda r: (r[0], r[2]))


def _sweep(a: PianoRoll, b: PianoRoll):
    cuts = np.union1d(a.changepoints, b.changepoints)
    ia = np.searchsorted(a.changepoints, cuts, side="right") - 1
    ib = np.searchsorted(b.changepoints, cuts, side="right") - 1
    return np.append(cuts, a.duration), ia, ib


def roll_rectangles(roll: PianoRoll, kind: str = "note"):
    """``(start, end, pitch, kind)`` for every maximal sounding run of every pitch."""
    cuts = roll.boundaries
    labels = [{p: kind for p in pitches_from_mask(m)} for m in roll.segments]
    return _runs(cuts, labels)


def difference_rectangles(pscore: PianoRoll, transcript: PianoRoll):
    """Maximal runs labelled ``pscore`` (only there), ``transcript`` (only there) or ``both``."""
    if pscore.duration != transcript.duration:
        raise ValueError(f"durations differ: {pscore.duration} vs {transcript.duration}")
    cuts, ia, ib = _sweep(pscore, transcript)
    labels = []
    for i, j in zip(ia, ib):
        ma, mb = pscore.segments[i], transcript.segments[j]
        lab = {p: "both" for p in pitches_from_mask(ma & mb)}
        lab.update({p: "pscore" for p in pitches_from_mask(ma & ~mb)})
        lab.update({p: "transcript" for p in pitches_from_mask(mb & ~ma)})
        labels.append(lab)
    return _runs(cuts, labels)


def _pitch_span(rects) -> tuple[int, int]:
    pitches = [r[2] for r in rects]
    if not pitches:
        return 60, 72
    return min(pitches) - 1, max(pitches) + 2


def _panel(rects, title: str, y0: float, duration: float, lo: int, hi: int) -> list[str]:
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    row_h = PANEL_H / (hi - lo)
    sx = plot_w / duration
    out = [f'<g class="panel" data-title="{escape(title)}">',
           f'<text x="{MARGIN_L}" y="{y0 - 8:.1f}" font-size="13">{escape(title)}</text>',
           f'<rect x="{MARGIN_L}" y="{y0:.1f}" width="{plot_w}" height="{PANEL_H}" '
           f'fill="none" stroke="#444"/>']
    for start, end, p, kind in rects:
        y = y0 + (hi - 1 - p) * row_h
        out.append(f'<rect class="{kind}" x="{MARGIN_L + start * sx:.3f}" y="{y:.3f}" '
                   f'width="{max((end - start) * sx, 0.5):.3f}" height="{row_h:.3f}" '
                   f'fill="{COLORS[kind]}"/>')
    for p in range(lo, hi):
        if p % 12 == 0:
            y = y0 + (hi - 0.5 - p) * row_h
            out.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.1f}" font-size="10" '
                       f'text-anchor="end">{p}</text>')
    out.append("</g>")
    return out


def _time_ticks(duration: float, y: float) -> list[str]:
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    step = 10 ** math.floor(math.log10(duration)) if duration > 0 else 1
    if duration / step < 4:
        step /= 2
    out = []
    t = 0.0
    while t <= duration + 1e-9:
        x = MARGIN_L + t * plot_w / duration
        out.append(f'<text x="{x:.1f}" y="{y:.1f}" font-size="10" text-anchor="middle">{t:g}</text>')
        t += step
    out.append(f'<text x="{WIDTH / 2}" y="{y + 16:.1f}" font-size="11" '
               f'text-anchor="middle">time (s)</text>')
    return out


def render_comparison_svg(pscore: PianoRoll, transcript: PianoRoll, path) -> dict[str, int]:
    """Three stacked panels: transcript, performance-aligned score, and their difference.

    In the difference panel red marks notes only in the aligned score,
    yellow notes only in the transcript and grey notes in both.  Returns
    the difference-panel rectangle counts per colour class.
    """
    diff = difference_rectangles(pscore, transcript)
    top = roll_rectangles(transcript)
    mid = roll_rectangles(pscore)
    lo, hi = _pitch_span(top + mid)
    T = transcript.duration
    height = MARGIN_T + 3 * PANEL_H + 2 * GAP + 40
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
             f'viewBox="0 0 {WIDTH} {height}">',
             '<rect width="100%" height="100%" fill="white"/>']
    y = MARGIN_T
    for rects, title in ((top, "transcript"), (mid, "performance-aligned score"),
                         (diff, "difference (red: score only, yellow: transcript only)")):
        parts += _panel(rects, title, y, T, lo, hi)
        y += PANEL_H + GAP
    parts += _time_ticks(T, y - GAP + 14)
    parts.append(f'<text x="14" y="{MARGIN_T + 1.5 * PANEL_H + GAP}" font-size="11" '
                 f'transform="rotate(-90 14 {MARGIN_T + 1.5 * PANEL_H + GAP})">MIDI pitch</text>')
    parts.append("</svg>")
    write_text(path, "\n".join(parts) + "\n")
    counts = {k: 0 for k in ("pscore", "transcript", "both")}
    for r in diff:
        counts[r[3]] += 1
    return counts


def render_scatter_svg(xs: Sequence[float], ys: Sequence[float], labels: Sequence[str] | None,
                       path, x_label: str = "x", y_label: str = "y", title: str = "") -> float | None:
    """Scatter plot with the Pearson correlation in the title.

    ``labels`` become per-point tooltips.  The correlation is omitted (and
    ``None`` returned) when it is undefined, e.g. for a single point.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and of equal length")
    if labels is not None and len(labels) != len(x):
        raise ValueError("one label per point expected")
    try:
        r = pearson(x, y)
    except ValueError:
        r = None
    heading = title + (f" (r = {r:.3f})" if r is not None else "")

    size, pad = 480, 60
    lo = float(min(x.min(initial=0), y.min(initial=0)))
    hi = float(max(x.max(initial=1), y.max(initial=1)))
    if hi <= lo:
        hi = lo + 1

    def px(v):
        return pad + (v - lo) / (hi - lo) * (size - 2 * pad)

    def py(v):
        return size - pad - (v - lo) / (hi - lo) * (size - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<title>{escape(heading)}</title>',
             f'<text x="{size / 2}" y="24" font-size="14" text-anchor="middle">{escape(heading)}</text>',
             f'<line x1="{px(lo):.1f}" y1="{py(lo):.1f}" x2="{px(hi):.1f}" y2="{py(hi):.1f}" '
             f'stroke="#bbb" stroke-dasharray="4 3"/>',
             f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" '
             f'fill="none" stroke="#444"/>',
             f'<text x="{size / 2}" y="{size - 18}" font-size="12" '
             f'text-anchor="middle">{escape(x_label)}</text>',
             f'<text x="18" y="{size / 2}" font-size="12" text-anchor="middle" '
             f'transform="rotate(-90 18 {size / 2})">{escape(y_label)}</text>',
             f'<text x="{pad}" y="{size - pad + 14}" font-size="10">{lo:g}</text>',
             f'<text x="{size - pad}" y="{size - pad + 14}" font-size="10" '
             f'text-anchor="end">{hi:g}</text>']
    for k, (a, b) in enumerate(zip(x, y)):
        tip = f"<title>{escape(str(labels[k]))}</title>" if labels is not None else ""
        parts.append(f'<circle class="marker" cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" '
                     f'fill="#3b5b92" fill-opacity="0.7">{tip}</circle>')
    parts.append("</svg>")
    write_text(path, "\n".join(parts) + "\n")
    return r
