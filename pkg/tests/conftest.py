import numpy as np
import pytest

from aligneval.alignment import AlignmentFn
from aligneval.pianoroll import NoteList, from_notes


def random_notes(rng, duration, n_notes=12, pitches=(55, 80), grid=None, axis="beats"):
    triples = []
    for _ in range(n_notes):
        on = rng.uniform(0, duration * 0.95)
        off = on + rng.uniform(0.05, duration / 3)
        if grid:
            on = np.floor(on / grid) * grid
            off = max(on + grid, np.round(off / grid) * grid)
        triples.append((int(rng.integers(*pitches)), on, min(off, duration)))
    return NoteList.from_tuples(triples, duration, axis)


def random_roll(rng, duration=4.0, n_notes=10, pitches=(55, 70), grid=None):
    return from_notes(random_notes(rng, duration, n_notes, pitches, grid))


def random_alignment(rng, S, T, n_knots=6, jumps=False, flats=False):
    """Random monotone piecewise-linear alignment from (0, 0) to (S, T)."""
    s = np.sort(rng.uniform(0, S, n_knots))
    t = np.sort(rng.uniform(0, T, n_knots))
    if flats and n_knots > 2:
        t[2] = t[1]
    if jumps and n_knots > 3:
        s[3] = s[2]
    knots = [(0.0, 0.0)] + list(zip(s, t)) + [(S, T)]
    return AlignmentFn(knots, S, T)


def brute_active(notes, t):
    return frozenset(n.pitch for n in notes if n.onset <= t < n.offset)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def min_monotone_path_cost(C):
    """Exhaustive minimum over all (1,1)/(1,0)/(0,1) paths; also returns the path count."""
    n, m = C.shape
    best = [np.inf]
    count = [0]

    def walk(i, j, acc):
        acc += C[i, j]
        if acc >= best[0] and (i, j) != (n - 1, m - 1):
            count[0] += _delannoy(n - 1 - i, m - 1 - j)
            return
        if (i, j) == (n - 1, m - 1):
            count[0] += 1
            best[0] = min(best[0], acc)
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)

    walk(0, 0, 0.0)
    return best[0], count[0]


def _delannoy(a, b):
    from math import comb
    return sum(comb(a, k) * comb(b, k) * 2 ** k for k in range(min(a, b) + 1))


def nondecreasing_sequences(length, high):
    """All nondecreasing integer tuples of the given length with entries in [0, high]."""
    if length == 0:
        yield ()
        return

    def rec(prefix, lo):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for v in range(lo, high + 1):
            yield from rec(prefix + [v], v)

    yield from rec([], 0)


# -- acceptance verdicts ------------------------------------------------------------

ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_verdict(name: str, ok: bool, detail: str) -> bool:
    """Log one acceptance criterion; the lines are repeated in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    ACCEPTANCE.append((name, ok, detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
