import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from aligneval.cli import main
from aligneval.io import REPORT_COLUMNS, read_alignment
from aligneval.midi import MidiIngestConfig, ingest_midi

FIX = Path(__file__).parent / "fixtures"
SCORE = str(FIX / "score_10s.mid")
PERF = str(FIX / "perf_10s.mid")
WAV = str(FIX / "perf_10s.wav")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def gt_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("gt")
    assert run("ground-truth", "--score", SCORE, "--transcript", PERF, "--lambda", 0.1,
               "--dt", 0.01, "-o", d / "gt.json") == 0
    return d / "gt.json"


def test_ground_truth_writes_alignment_and_summary(gt_file):
    doc = json.loads(gt_file.read_text())
    assert {"data_cost", "reg_cost", "total", "lambda"} <= doc["summary"].keys()
    a = read_alignment(gt_file)
    assert a.S == 20.0 and a.T == 10.0
    assert doc["summary"]["total"] == pytest.approx(
        doc["summary"]["data_cost"] + 0.1 * doc["summary"]["reg_cost"], abs=1e-12)


def test_ground_truth_is_deterministic(gt_file, tmp_path):
    run("ground-truth", "--score", SCORE, "--transcript", PERF, "-o", tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == gt_file.read_bytes()


def test_evaluate_rejects_non_monotone_candidate(gt_file, tmp_path, capsys):
    bad = {"units": {"score": "beats", "performance": "seconds"}, "S": 20.0, "T": 10.0,
           "knots": [[0, 0], [10, 6], [15, 4], [20, 10]]}
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    code = run("evaluate", "--score", SCORE, "--transcript", PERF, "--gt", gt_file,
               "--cand", tmp_path / "bad.json", "-o", tmp_path / "r.json")
    assert code != 0
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_evaluate_with_true_alignment_as_candidate(gt_file, tmp_path):
    code = run("evaluate", "--score", SCORE, "--transcript", PERF, "--gt", gt_file,
               "--cand", FIX / "true_10s.json", "-o", tmp_path / "r.json",
               "--csv", tmp_path / "rows.csv", "--pair-id", "p", "--feature", "oracle")
    assert code == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["matched_fraction"] == 1.0 and doc["mad_ms"] < 15
    with open(tmp_path / "rows.csv") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == list(REPORT_COLUMNS) and rows[0]["feature"] == "oracle"


def test_report_empty_directory(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert run("report", "--dir", tmp_path / "empty", "-o", tmp_path / "s.csv") != 0
    assert "no reports found" in capsys.readouterr().err
    assert not (tmp_path / "s.csv").exists()


def write_report(path, pair, feature, mad, note_mad):
    doc = {"pair_id": pair, "feature": feature, "mad_ms": mad, "rmse_ms": mad * 1.3,
           "note_mad_ms": note_mad, "note_rmse_ms": note_mad * 1.2,
           "recognition_rate": 1 - mad / 1000, "matched_fraction": 1.0, "n_notes": 10,
           "n_matched": 10, "threshold_ms": 50.0}
    path.write_text(json.dumps(doc))


def test_report_means_correlations_and_outliers(tmp_path):
    d = tmp_path / "runs"
    d.mkdir()
    mads = [10, 20, 30, 40, 500]
    for k, m in enumerate(mads):
        write_report(d / f"p{k}.json", f"p{k}", "spec", m, m * 0.9 + 1)
    (d / "not_a_report.json").write_text('{"knots": []}')
    out = tmp_path / "summary.csv"
    assert run("report", "--dir", d, "-o", out, "--correlations", "--outlier-mad-ms", 300) == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 5 and list(rows[0]) == list(REPORT_COLUMNS)
    with open(tmp_path / "summary_means.csv") as f:
        means = list(csv.DictReader(f))
    assert means[0]["n"] == "4" and float(means[0]["mad_ms"]) == pytest.approx(25.0)
    with open(tmp_path / "summary_correlations.csv") as f:
        corr = list(csv.DictReader(f))
    assert float(corr[0]["mad_ms~note_mad_ms"]) == pytest.approx(1.0)


def test_report_respects_thread_cap(tmp_path, monkeypatch):
    d = tmp_path / "runs"
    d.mkdir()
    write_report(d / "a.json", "a", "cqt", 5.0, 4.0)
    monkeypatch.setenv("ALIGN_EVAL_THREADS", "1")
    assert run("report", "--dir", d, "-o", tmp_path / "s.csv") == 0
    monkeypatch.setenv("ALIGN_EVAL_THREADS", "zero")
    assert run("report", "--dir", d, "-o", tmp_path / "s2.csv") != 0


def test_warp_writes_midi_alignment_and_wav(tmp_path):
    code = run("warp", "--score", SCORE, "--kind", "smooth-rubato", "--seed", 4,
               "--duration", 12, "-o", tmp_path / "p.mid", "--alignment", tmp_path / "a.json",
               "--wav", tmp_path / "p.wav")
    assert code == 0
    tau = read_alignment(tmp_path / "a.json")
    perf = ingest_midi(tmp_path / "p.mid", MidiIngestConfig(axis="performance"))
    score = ingest_midi(SCORE)
    assert tau.T == 12.0 and perf.duration == pytest.approx(12.0, abs=1e-3)
    assert np.allclose(perf.onsets, np.sort(tau(score.onsets)), atol=1e-3)
    assert (tmp_path / "p.wav").stat().st_size > 44


def test_failed_warp_removes_partial_outputs(tmp_path):
    (tmp_path / "blocked").write_text("a file where a directory is needed")
    code = run("warp", "--score", SCORE, "-o", tmp_path / "p.mid",
               "--alignment", tmp_path / "blocked" / "a.json")
    assert code != 0
    assert not (tmp_path / "p.mid").exists()


def test_visualize_comparison_and_scatter(gt_file, tmp_path):
    assert run("visualize", "comparison", "--score", SCORE, "--transcript", PERF,
               "--alignment", gt_file, "-o", tmp_path / "c.svg") == 0
    assert (tmp_path / "c.svg").read_text().startswith("<svg")
    d = tmp_path / "runs"
    d.mkdir()
    for k in range(3):
        write_report(d / f"{k}.json", str(k), "chroma", 10.0 * (k + 1), 9.0 * (k + 1))
    run("report", "--dir", d, "-o", tmp_path / "s.csv")
    assert run("visualize", "scatter", "--summary", tmp_path / "s.csv", "-o",
               tmp_path / "sc.svg") == 0
    assert "r = 1.000" in (tmp_path / "sc.svg").read_text()


def test_align_needs_a_performance(tmp_path):
    with pytest.raises(SystemExit):
        run("align", "--score", SCORE, "-o", tmp_path / "c.json")


def test_batch_manifest(tmp_path, monkeypatch):
    for name in ("score_10s.mid", "perf_10s.mid"):
        shutil.copy(FIX / name, tmp_path / name)
    manifest = {"pairs": [{"pair_id": "a", "score": "score_10s.mid", "transcript": "perf_10s.mid",
                           "feature": "cqt", "out_dir": "out"},
                          {"pair_id": "b", "score": "score_10s.mid", "transcript": "perf_10s.mid",
                           "feature": "chroma", "out_dir": "out"}]}
    (tmp_path / "m.json").write_text(json.dumps(manifest))
    monkeypatch.setenv("ALIGN_EVAL_THREADS", "2")
    assert run("batch", "--manifest", tmp_path / "m.json") == 0
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == [
        "a.cqt.cand.json", "a.cqt.report.json", "a.gt.json",
        "b.chroma.cand.json", "b.chroma.report.json", "b.gt.json"]
