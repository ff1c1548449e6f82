import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aligneval.alignment import AlignmentFn, identity_alignment
from aligneval.metrics import (OnsetPairs, correspond_notes, evaluate_alignment, last_onset,
                               note_mad, note_rmse, pearson, recognition_rate, temporal_mad,
                               temporal_rmse)
from aligneval.pianoroll import NoteList, from_notes

from conftest import random_alignment, random_roll
from oracles import numeric_temporal


def three_step_score():
    return from_notes(NoteList.from_tuples([(60, 0, 1), (62, 1, 2), (64, 2, 3)], 3))


def test_temporal_examples():
    score = three_step_score()
    tau = AlignmentFn([(0, 0), (1, 1), (2, 2), (3, 3)])
    assert temporal_mad(tau, tau, score) == 0
    assert temporal_rmse(tau, tau, score) == 0
    shifted = AlignmentFn([(0, 0.1), (1, 1.1), (2, 2.1), (3, 3.1)], 3, 3.1)
    assert temporal_mad(shifted, tau, score) == pytest.approx(100.0, abs=1e-9)
    assert temporal_rmse(shifted, tau, score) == pytest.approx(100.0, abs=1e-9)
    star = AlignmentFn([(0, 0), (1, 2), (2, 2), (3, 3)])
    mad_oracle, rmse_oracle = numeric_temporal(tau, star, score)
    assert mad_oracle == pytest.approx(500.0, abs=1e-3)
    assert rmse_oracle == pytest.approx(577.350, abs=1e-3)
    assert temporal_mad(tau, star, score) == pytest.approx(500.0, abs=1e-9)
    assert temporal_rmse(tau, star, score) == pytest.approx(1000 * math.sqrt(1 / 3), abs=1e-9)


def test_integration_stops_at_last_onset():
    score = three_step_score()
    assert last_onset(score) == 2.0
    tau = AlignmentFn([(0, 0), (2, 2), (3, 3)])
    late = AlignmentFn([(0, 0), (2, 2), (3, 9)], 3, 9)
    assert temporal_mad(tau, late, score) == 0


def test_temporal_requires_an_onset():
    score = from_notes(NoteList.from_tuples([(60, 0, 3)], 3))
    tau = identity_alignment(3.0)
    with pytest.raises(ValueError):
        temporal_mad(tau, tau, score)


def test_temporal_against_numeric_random(rng):
    for _ in range(20):
        score = random_roll(rng, 8.0, 15)
        a = random_alignment(rng, 8.0, 12.0, 7)
        b = random_alignment(rng, 8.0, 12.0, 7)
        mad_o, rmse_o = numeric_temporal(a, b, score)
        assert temporal_mad(a, b, score) == pytest.approx(mad_o, abs=1e-3)
        assert temporal_rmse(a, b, score) == pytest.approx(rmse_o, abs=1e-3)
        assert temporal_mad(a, b, score) == temporal_mad(b, a, score)
        assert temporal_rmse(a, b, score) == temporal_rmse(b, a, score)


def test_sign_change_split():
    score = from_notes(NoteList.from_tuples([(60, 0, 1), (62, 1, 2)], 2))
    a = AlignmentFn([(0, 0), (1, 1), (2, 2)])
    b = AlignmentFn([(0, 0.3), (1, 0.7), (2, 2)])
    # error goes from -0.3 to +0.3 over [0, 1] (last onset at 1): two triangles of 0.075
    assert temporal_mad(a, b, score) == pytest.approx(150.0, abs=1e-9)


def test_note_metric_examples():
    same = OnsetPairs([1, 2, 3], [1, 2, 3])
    assert note_mad(same) == 0 and note_rmse(same) == 0
    pairs = OnsetPairs([1.0, 2.0], [1.1, 1.9])
    assert note_mad(pairs) == pytest.approx(100.0)
    assert note_rmse(pairs) == pytest.approx(100.0)
    pairs = OnsetPairs([0, 1, 3], [0.05, 1.2, 2.9])
    assert note_mad(pairs) == pytest.approx(116.6667, abs=1e-3)
    # direct arithmetic: sqrt((0.05^2 + 0.2^2 + 0.1^2) / 3)
    assert note_rmse(pairs) == pytest.approx(132.2876, abs=1e-3)
    with pytest.raises(ValueError):
        note_mad(OnsetPairs([], []))
    with pytest.raises(ValueError):
        OnsetPairs([1, 2], [1])


def test_recognition_rate_examples():
    assert recognition_rate(OnsetPairs([1, 2], [1, 2]), 1.0) == 1.0
    dev = OnsetPairs([1.010, 2.060, 3.200], [1, 2, 3])
    assert recognition_rate(dev, 50) == pytest.approx(1 / 3)
    assert recognition_rate(dev, 250) == 1.0
    with pytest.raises(ValueError):
        recognition_rate(dev, 0)
    with pytest.raises(ValueError):
        recognition_rate(OnsetPairs([], []), 10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=1, max_size=40))
def test_note_mad_le_rmse_and_rate_monotone(pairs):
    p = OnsetPairs(*zip(*pairs))
    assert note_mad(p) <= note_rmse(p) + 1e-9
    rates = [recognition_rate(p, th) for th in (1, 10, 100, 1000, 1e6)]
    assert rates == sorted(rates)


def corr_fixture(transcript_onsets):
    score = NoteList.from_tuples([(60, 5.0, 6.0)], 10)
    tau = identity_alignment(10.0)
    trans = NoteList.from_tuples([(60, t, t + 0.5) for t in transcript_onsets], 10,
                                 axis="seconds")
    return correspond_notes(score, tau, trans)


def test_correspondence_examples():
    c = corr_fixture([5.03])
    assert c.n_matched == 1 and c.transcript_onsets[0] == 5.03
    c = corr_fixture([5.15])
    assert c.n_matched == 0 and c.unmatched == (0,)
    c = corr_fixture([4.95, 5.04])
    assert c.transcript_onsets[0] == 5.04
    c = corr_fixture([])
    assert c.matched_fraction == 0


def test_correspondence_consumes_transcript_notes():
    score = NoteList.from_tuples([(60, 1.0, 1.5), (60, 1.05, 1.5)], 3)
    trans = NoteList.from_tuples([(60, 1.0, 1.5)], 3, axis="seconds")
    tau = identity_alignment(3.0)
    c = correspond_notes(score, tau, trans)
    assert c.n_matched == 1 and c.unmatched == (1,)
    shared = correspond_notes(score, tau, trans, allow_shared=True)
    assert shared.n_matched == 2


def test_infinite_window_matches_every_present_pitch(rng):
    score = NoteList.from_tuples([(p, i * 0.5, i * 0.5 + 0.4) for i, p in enumerate(range(60, 72))], 7)
    trans = NoteList.from_tuples([(p, rng.uniform(0, 9), 9.5) for p in range(60, 72, 2)], 10,
                                 axis="seconds")
    c = correspond_notes(score, AlignmentFn([(0, 0), (7, 10)]), trans, window_ms=math.inf)
    assert c.n_matched == 6
    assert sorted(score.pitches[c.score_indices]) == list(range(60, 72, 2))


def test_pearson_examples():
    xs = np.array([1.0, 2, 3, 4])
    assert pearson(xs, 2 * xs) == pytest.approx(1.0)
    assert pearson(xs, -xs) == pytest.approx(-1.0)
    assert pearson([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [1])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


def test_evaluate_alignment_report():
    notes = NoteList.from_tuples([(60 + i, i, i + 1) for i in range(8)], 8)
    score = from_notes(notes)
    gt = AlignmentFn([(0, 0), (8, 16)])
    trans = NoteList.from_tuples([(n.pitch, 2 * n.onset, 2 * n.offset) for n in notes], 16,
                                 axis="seconds")
    rep = evaluate_alignment(gt, gt, score, notes, trans)
    assert rep.mad_ms == 0 and rep.note_mad_ms == 0
    assert rep.matched_fraction == 1.0 and rep.n_matched == 8
    assert rep.recognition_rate == 1.0
