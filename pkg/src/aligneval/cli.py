"""Command-line entry point: ``aligneval <subcommand> ...``.

Every subcommand exits 0 on success.  On failure it prints a one-line
diagnostic to stderr, removes whatever files it had already written, and
exits 1.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import pipeline
from .features import FEATURE_KINDS, HOP, synthesize
from .groundtruth import GtConfig
from .io import (REPORT_COLUMNS, append_row_csv, read_alignment_document, read_rows_csv,
                 read_wav, report_row, write_alignment, write_report_json, write_rows_csv,
                 write_wav)
from .midi import write_midi
from .pianoroll import from_notes
from .plots import render_comparison_svg, render_scatter_svg
from .warps import WARP_KINDS, synthetic_warp, warp_notes


class Outputs:
    """Files created by the current command, removed again if it fails.

    Files that existed beforehand (e.g. a CSV being appended to) are left alone.
    """

    def __init__(self):
        self.paths: list[Path] = []

    def __call__(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists():
            self.paths.append(path)
        return path

    def cleanup(self):
        for p in self.paths:
            p.unlink(missing_ok=True)


def _gt(args, out: Outputs):
    score = pipeline.load_score(args.score, args.pedal)
    transcript = pipeline.load_transcript(args.transcript, args.pedal)
    cfg = GtConfig(lam=args.lam, dt=args.dt, band=args.band)
    res = pipeline.ground_truth(score, transcript, cfg)
    write_alignment(out(args.output), res.alignment, {"summary": pipeline.gt_summary(res)})
    print(f"ground truth: d1={res.data_cost:.6g} R={res.reg_cost:.6g} "
          f"objective={res.total:.6g} ({len(res.alignment.s)} knots)")


def _align(args, out: Outputs):
    score = pipeline.load_score(args.score, args.pedal)
    if args.perf is not None:
        wav = read_wav(args.perf)
    else:
        transcript = pipeline.load_transcript(args.perf_midi, args.pedal)
        wav = synthesize(transcript, duration=transcript.duration)
    cand = pipeline.baseline(score, wav, args.features, args.score_tempo, args.hop)
    write_alignment(out(args.output), cand, {"feature": args.features})
    print(f"{args.features} alignment: {len(cand.s)} knots over {cand.T:.3f} s")


def _evaluate(args, out: Outputs):
    score = pipeline.load_score(args.score, args.pedal)
    transcript = pipeline.load_transcript(args.transcript, args.pedal)
    gt, _ = read_alignment_document(args.gt)
    cand, cand_doc = read_alignment_document(args.cand)
    feature = args.feature if args.feature is not None else str(cand_doc.get("feature", ""))
    pair_id = args.pair_id if args.pair_id is not None else Path(args.cand).stem
    report = pipeline.evaluate(score, transcript, gt, cand, args.threshold_ms, args.window_ms)
    write_report_json(out(args.output), report, pair_id, feature)
    if args.csv:
        append_row_csv(out(args.csv), report_row(report, pair_id, feature))
    print(json.dumps({k: _finite_or_none(v) for k, v in report.to_dict().items()}))


def _finite_or_none(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def _derived(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}.csv")


def _report(args, out: Outputs):
    rows = pipeline.collect_reports(args.dir)
    if not rows:
        raise ValueError(f"no reports found in {args.dir}")
    kept, dropped = pipeline.exclude_outliers(rows, args.outlier_mad_ms)
    output = Path(args.output)
    write_rows_csv(out(output), rows)
    means = pipeline.feature_means(kept)
    write_rows_csv(out(_derived(output, "means")), means, ("feature", "n") + pipeline.METRIC_COLUMNS)
    print(f"{len(rows)} reports, {len(dropped)} excluded as outliers")
    for m in means:
        print("  " + "  ".join(f"{k}={_fmt(m[k])}" for k in ("feature", "n") + pipeline.METRIC_COLUMNS))
    if args.correlations:
        corr = pipeline.feature_correlations(kept)
        cols = ("feature", "n") + tuple(f"{a}~{b}" for a, b in pipeline.CORRELATION_PAIRS)
        write_rows_csv(out(_derived(output, "correlations")), corr, cols)
        for c in corr:
            print("  pearson " + "  ".join(f"{k}={_fmt(c[k])}" for k in cols))


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _visualize(args, out: Outputs):
    if args.kind == "comparison":
        score = pipeline.load_score(args.score, args.pedal)
        transcript = from_notes(pipeline.load_transcript(args.transcript, args.pedal))
        alignment, _ = read_alignment_document(args.alignment)
        pscore = pipeline.aligned_score(score, alignment)
        if pscore.duration != transcript.duration:
            raise ValueError(f"alignment ends at {pscore.duration} s but the transcript spans "
                             f"{transcript.duration} s")
        counts = render_comparison_svg(pscore, transcript, out(args.output))
        print(f"difference panel: {counts['pscore']} red, {counts['transcript']} yellow, "
              f"{counts['both']} shared")
    else:
        rows = read_rows_csv(args.summary)
        if args.feature:
            rows = [r for r in rows if r["feature"] == args.feature]
        pts = [(float(r[args.x]), float(r[args.y]), r["pair_id"]) for r in rows
               if r.get(args.x) not in (None, "") and r.get(args.y) not in (None, "")]
        if not pts:
            raise ValueError(f"no rows with both {args.x} and {args.y} in {args.summary}")
        xs, ys, labels = zip(*pts)
        r = render_scatter_svg(xs, ys, labels, out(args.output), args.x, args.y,
                               args.title or f"{args.y} vs {args.x}")
        print(f"{len(xs)} points" + (f", r = {r:.3f}" if r is not None else ""))


def _warp(args, out: Outputs):
    score = pipeline.load_score(args.score, args.pedal)
    T = args.duration if args.duration is not None else score.duration * 60.0 / args.bpm
    tau = synthetic_warp(args.kind, args.seed, score.duration, T)
    perf = warp_notes(score, tau)
    write_midi(perf, out(args.output))
    write_alignment(out(args.alignment), tau, {"warp": {"kind": args.kind, "seed": args.seed}})
    if args.wav:
        write_wav(out(args.wav), synthesize(perf, duration=T))
    print(f"{args.kind} warp (seed {args.seed}): {score.duration:g} beats -> {T:g} s")


def _batch(args, out: Outputs):
    manifests = pipeline.load_manifests(args.manifest)
    if not manifests:
        raise ValueError(f"{args.manifest} lists no pairs")
    for m in manifests:
        m.check_inputs()
        for p in (m.gt_path, m.cand_path, m.report_path):
            out(p)
    reports = pipeline.run_batch(manifests)
    for m, r in zip(manifests, reports):
        print(f"{m.pair_id} [{m.feature}] mad={r.mad_ms:.2f} ms note_mad={r.note_mad_ms:.2f} ms")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aligneval",
                                description="Score-to-performance alignment evaluation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--pedal", choices=("ignore", "extend"), default="ignore",
                        help="sustain pedal handling when reading MIDI (default: ignore)")

    g = sub.add_parser("ground-truth", help="tempo-regularized alignment of a score to a transcript")
    g.add_argument("--score", required=True)
    g.add_argument("--transcript", required=True)
    g.add_argument("--lambda", dest="lam", type=float, default=0.1)
    g.add_argument("--dt", type=float, default=0.01, help="performance frame step in seconds")
    g.add_argument("--band", type=int, default=None, help="frame band half-width for pruning")
    g.add_argument("-o", "--output", required=True)
    common(g)
    g.set_defaults(func=_gt)

    a = sub.add_parser("align", help="feature-DTW baseline alignment against audio")
    a.add_argument("--score", required=True)
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--perf", help="performance recording (single-channel WAV)")
    src.add_argument("--perf-midi", help="performance MIDI, synthesized before alignment")
    a.add_argument("--features", choices=FEATURE_KINDS, default="chroma")
    a.add_argument("--score-tempo", type=float, default=None,
                   help="seconds per beat for the score rendering (default: mean tempo)")
    a.add_argument("--hop", type=int, default=HOP)
    a.add_argument("-o", "--output", required=True)
    common(a)
    a.set_defaults(func=_align)

    e = sub.add_parser("evaluate", help="metric report for a candidate against ground truth")
    e.add_argument("--score", required=True)
    e.add_argument("--transcript", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--cand", required=True)
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--csv", default=None, help="append a summary row to this CSV")
    e.add_argument("--pair-id", default=None)
    e.add_argument("--feature", default=None)
    e.add_argument("--threshold-ms", type=float, default=50.0)
    e.add_argument("--window-ms", type=float, default=100.0)
    common(e)
    e.set_defaults(func=_evaluate)

    r = sub.add_parser("report", help="aggregate metric reports from a directory")
    r.add_argument("--dir", required=True)
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--correlations", action="store_true")
    r.add_argument("--outlier-mad-ms", type=float, default=None,
                   help="leave reports with a larger MAD out of means and correlations")
    r.set_defaults(func=_report)

    v = sub.add_parser("visualize", help="SVG figures")
    vsub = v.add_subparsers(dest="kind", required=True)
    vc = vsub.add_parser("comparison", help="transcript / aligned score / difference panels")
    vc.add_argument("--score", required=True)
    vc.add_argument("--transcript", required=True)
    vc.add_argument("--alignment", required=True)
    vc.add_argument("-o", "--output", required=True)
    common(vc)
    vc.set_defaults(func=_visualize)
    vs = vsub.add_parser("scatter", help="metric scatter plot from a report summary CSV")
    vs.add_argument("--summary", required=True)
    vs.add_argument("--x", choices=REPORT_COLUMNS[2:], default="mad_ms")
    vs.add_argument("--y", choices=REPORT_COLUMNS[2:], default="note_mad_ms")
    vs.add_argument("--feature", default=None)
    vs.add_argument("--title", default=None)
    vs.add_argument("-o", "--output", required=True)
    vs.set_defaults(func=_visualize)

    w = sub.add_parser("warp", help="render a score as a performance with a known synthetic warp")
    w.add_argument("--score", required=True)
    w.add_argument("--kind", choices=WARP_KINDS, default="piecewise")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--duration", type=float, default=None, help="performance length in seconds")
    w.add_argument("--bpm", type=float, default=120.0,
                   help="mean tempo when --duration is not given")
    w.add_argument("-o", "--output", required=True, help="warped performance MIDI")
    w.add_argument("--alignment", required=True, help="true alignment JSON")
    w.add_argument("--wav", default=None, help="also synthesize the performance to WAV")
    common(w)
    w.set_defaults(func=_warp)

    b = sub.add_parser("batch", help="run ground truth, alignment and evaluation for many pairs")
    b.add_argument("--manifest", required=True)
    b.set_defaults(func=_batch)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Outputs()
    try:
        args.func(args, out)
    except (ValueError, RuntimeError, OSError, KeyError, TypeError) as exc:
        out.cleanup()
        msg = str(exc) or exc.__class__.__name__
        print(f"aligneval {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
