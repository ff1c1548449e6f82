"""Standard MIDI File ingestion into note lists.

Byte-level parsing is delegated to ``mido``; this module turns the merged
event stream into timed notes.  Score files are read on a beat axis
(``ticks / PPQ``, tempo events ignored); performance files are read in
seconds through the tempo map.  All tracks and channels merge into one
note stream.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path

import mido

from .io import atomic_path
from .pianoroll import N_PITCHES, PERFORMANCE_AXIS, SCORE_AXIS, NoteEvent, NoteList

DEFAULT_TEMPO = 500_000  # microseconds per quarter note
SUSTAIN = 64

_AXIS_ALIASES = {"score": SCORE_AXIS, SCORE_AXIS: SCORE_AXIS,
                 "performance": PERFORMANCE_AXIS, PERFORMANCE_AXIS: PERFORMANCE_AXIS}


@dataclass(frozen=True)
class MidiIngestConfig:
    axis: str = "score"
    pedal_mode: str = "ignore"
    pitch_range: tuple[int, int] = (0, N_PITCHES)

    def __post_init__(self):
        if self.axis not in _AXIS_ALIASES:
            raise ValueError(f"unknown axis {self.axis!r}; use 'score' or 'performance'")
        if self.pedal_mode not in ("ignore", "extend"):
            raise ValueError(f"unknown pedal mode {self.pedal_mode!r}")
        low, high = self.pitch_range
        if not 0 <= low < high <= N_PITCHES:
            raise ValueError(f"pitch range must satisfy 0 <= low < high <= {N_PITCHES}")

    @property
    def note_axis(self) -> str:
        return _AXIS_ALIASES[self.axis]


class TempoMap:
    """Piecewise-linear tick-to-seconds conversion built from set-tempo events."""

    def __init__(self, ppq: int, changes: list[tuple[int, int]]):
        self.ppq = ppq
        ticks, tempos = [0], [DEFAULT_TEMPO]
        for tick, tempo in sorted(changes, key=lambda c: c[0]):
            if tick == ticks[-1]:
                tempos[-1] = tempo
            else:
                ticks.append(tick)
                tempos.append(tempo)
        seconds = [0.0]
        for k in range(1, len(ticks)):
            seconds.append(seconds[-1] + (ticks[k] - ticks[k - 1]) * tempos[k - 1] / (1e6 * ppq))
        self.ticks, self.tempos, self.seconds = ticks, tempos, seconds

    def __call__(self, tick: int) -> float:
        k = bisect.bisect_right(self.ticks, tick) - 1
        return self.seconds[k] + (tick - self.ticks[k]) * self.tempos[k] / (1e6 * self.ppq)


def _load(path) -> mido.MidiFile:
    try:
        mid = mido.MidiFile(str(path))
    except FileNotFoundError:
        raise
    except Exception as exc:  # mido raises a mix of OSError, EOFError, ValueError
        raise ValueError(f"unreadable MIDI file {path}: {exc}") from exc
    if mid.type not in (0, 1):
        raise ValueError(f"MIDI format {mid.type} not supported (only 0 and 1)")
    if mid.ticks_per_beat <= 0 or mid.ticks_per_beat & 0x8000:
        raise ValueError("SMPTE time division is not supported; expected ticks per quarter note")
    return mid


def _merged_events(mid: mido.MidiFile) -> tuple[list[tuple[int, int, mido.Message]], int]:
    events = []
    end = 0
    for tr, track in enumerate(mid.tracks):
        tick = 0
        for k, msg in enumerate(track):
            tick += msg.time
            events.append((tick, tr, k, msg))
        end = max(end, tick)
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return [(tick, k, msg) for tick, _, k, msg in events], end


def _note_ticks(events, end: int, pedal_mode: str) -> list[tuple[int, int, int]]:
    """``(pitch, on_tick, off_tick)`` for every sounded note."""
    open_notes: dict[int, list[int]] = {}
    held: set[int] = set()  # pitches released while the pedal is down
    pedal = False
    out = []

    def close(pitch, tick):
        starts = open_notes.get(pitch)
        if starts:
            on = starts.pop(0)
            if tick > on:
                out.append((pitch, on, tick))

    # note-offs sort before note-ons at the same tick so re-strikes do not swallow notes
    def order(e):
        tick, k, msg = e
        is_on = msg.type == "note_on" and msg.velocity > 0
        return (tick, 1 if is_on else 0, k)

    for tick, _, msg in sorted(events, key=order):
        if msg.type == "note_on" and msg.velocity > 0:
            if msg.note in held:
                held.discard(msg.note)
                close(msg.note, tick)
            open_notes.setdefault(msg.note, []).append(tick)
        elif msg.type in ("note_off", "note_on"):
            if pedal and pedal_mode == "extend":
                held.add(msg.note)
            else:
                close(msg.note, tick)
        elif msg.type == "control_change" and msg.control == SUSTAIN:
            down = msg.value >= 64
            if pedal and not down:
                for p in sorted(held):
                    close(p, tick)
                held.clear()
            pedal = down
    for pitch, starts in open_notes.items():
        for on in starts:
            if end > on:
                out.append((pitch, on, end))
    return out


def ingest_midi(path, cfg: MidiIngestConfig = MidiIngestConfig()) -> NoteList:
    """Read a format 0/1 MIDI file into a :class:`NoteList`.

    The note list's duration is the end of the last track, so trailing
    silence written into the file is kept.
    """
    mid = _load(path)
    ppq = mid.ticks_per_beat
    events, end = _merged_events(mid)
    if cfg.note_axis == SCORE_AXIS:
        def to_time(tick):
            return tick / ppq
    else:
        tempo_map = TempoMap(ppq, [(t, m.tempo) for t, _, m in events if m.type == "set_tempo"])
        to_time = tempo_map

    low, high = cfg.pitch_range
    notes = [NoteEvent(to_time(on), p, to_time(off))
             for p, on, off in _note_ticks(events, end, cfg.pedal_mode) if low <= p < high]
    duration = max([to_time(end)] + [n.offset for n in notes])
    if duration <= 0:
        raise ValueError(f"{path} contains no timed events")
    return NoteList(notes, duration, cfg.note_axis)


def write_midi(notes: NoteList, path, ppq: int = 960, tempo: int = DEFAULT_TEMPO,
               velocity: int = 80) -> Path:
    """Write a single-track format 0 file; the track ends at the note list's duration.

    Beat-axis notes map to ``round(beats * ppq)`` ticks.  Second-axis notes
    use one constant ``tempo``.
    """
    if notes.axis == SCORE_AXIS:
        def to_tick(x):
            return int(round(x * ppq))
    else:
        def to_tick(x):
            return int(round(x * 1e6 * ppq / tempo))

    events = []
    for n in notes:
        events.append((to_tick(n.offset), 0, mido.Message("note_off", note=n.pitch, velocity=0)))
        events.append((to_tick(n.onset), 1, mido.Message("note_on", note=n.pitch, velocity=velocity)))
    events.sort(key=lambda e: (e[0], e[1]))

    track = mido.MidiTrack()
    track.append(mido.MetaMessage("set_tempo", tempo=tempo, time=0))
    now = 0
    for tick, _, msg in events:
        track.append(msg.copy(time=tick - now))
        now = tick
    track.append(mido.MetaMessage("end_of_track", time=max(0, to_tick(notes.duration) - now)))
    mid = mido.MidiFile(type=0, ticks_per_beat=ppq)
    mid.tracks.append(track)
    path = Path(path)
    with atomic_path(path) as tmp:
        mid.save(str(tmp))
    return path
