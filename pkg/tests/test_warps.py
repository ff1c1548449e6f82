import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aligneval.alignment import evaluate_at
from aligneval.pianoroll import NoteList
from aligneval.warps import WARP_KINDS, synthetic_warp, warp_notes


def test_constant_tempo_is_two_knots():
    a = synthetic_warp("constant-tempo", 0, 8.0, 4.0)
    assert list(zip(a.s, a.t)) == [(0.0, 0.0), (8.0, 4.0)]


@pytest.mark.parametrize("kind", WARP_KINDS)
def test_same_seed_same_warp(kind):
    a = synthetic_warp(kind, 42, 20.0, 11.0)
    b = synthetic_warp(kind, 42, 20.0, 11.0)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.t, b.t)
    c = synthetic_warp(kind, 43, 20.0, 11.0)
    if kind != "constant-tempo":
        assert not (np.array_equal(a.s, c.s) and np.array_equal(a.t, c.t))


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(WARP_KINDS), st.integers(0, 10**6),
       st.floats(0.5, 200), st.floats(0.5, 200))
def test_endpoints_and_monotone(kind, seed, S, T):
    a = synthetic_warp(kind, seed, S, T)
    assert (a.s[0], a.t[0]) == (0.0, 0.0)
    assert (a.s[-1], a.t[-1]) == (S, T)
    assert np.all(np.diff(a.s) >= 0) and np.all(np.diff(a.t) >= 0)
    jumps = int(np.sum(np.diff(a.s) == 0))
    assert jumps == (1 if kind == "with-jump" else 0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["piecewise", "smooth-rubato"]), st.integers(0, 10**6),
       st.floats(1, 100), st.floats(1, 100))
def test_local_tempo_within_factor_two(kind, seed, S, T):
    a = synthetic_warp(kind, seed, S, T)
    slope = np.diff(a.t) / np.diff(a.s) / (T / S)
    assert slope.min() >= 0.5 - 1e-9 and slope.max() <= 2.0 + 1e-9


def test_with_jump_has_exactly_one_duplicated_s():
    for seed in range(20):
        a = synthetic_warp("with-jump", seed, 10.0, 7.0)
        s, counts = np.unique(a.s, return_counts=True)
        assert sorted(counts[counts > 1]) == [2]


def test_errors():
    with pytest.raises(ValueError):
        synthetic_warp("piecewise", 0, 0.0, 1.0)
    with pytest.raises(ValueError):
        synthetic_warp("zigzag", 0, 1.0, 1.0)


def test_warp_notes_maps_onsets_and_offsets():
    notes = NoteList.from_tuples([(60, 0, 1), (64, 1, 3), (67, 2.5, 4)], 4.0)
    tau = synthetic_warp("piecewise", 5, 4.0, 3.0)
    perf = warp_notes(notes, tau)
    assert perf.axis == "seconds" and perf.duration == 3.0
    assert np.allclose(perf.onsets, evaluate_at(tau, notes.onsets))
    with pytest.raises(ValueError):
        warp_notes(notes, synthetic_warp("piecewise", 5, 5.0, 3.0))
