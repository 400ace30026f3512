import bisect
import io
import struct
from collections import defaultdict, deque

import mido
import orjson
from loguru import logger

from core.constants import DRUM_CHANNEL, DRUM_CLASS_INDEX, MIDI_TEMPO, MIDI_TICKS_PER_BEAT
from core.score.notes import NoteEvent, NoteList, in_pitch_range, sort_notes
from core.taxonomy import InstrumentTaxonomy, default_taxonomy

MELODIC_CHANNELS = [c for c in range(16) if c != DRUM_CHANNEL]


class MidiParseError(ValueError):
    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class MidiScore:
    """Notes of a Standard MIDI File grouped by instrument class."""

    def __init__(
        self,
        tracks: dict[int, NoteList],
        dangling_notes: int = 0,
        dropped_notes: int = 0,
        meta: dict | None = None,
    ) -> None:
        self.tracks = tracks
        self.dangling_notes = dangling_notes
        self.dropped_notes = dropped_notes
        self.meta = meta

    def all_notes(self) -> NoteList:
        return sort_notes([n for notes in self.tracks.values() for n in notes])

    def __repr__(self) -> str:
        counts = {k: len(v) for k, v in self.tracks.items()}
        return f"MidiScore(tracks={counts}, dangling={self.dangling_notes}, dropped={self.dropped_notes})"


class TempoMap:
    """Converts absolute ticks to seconds through every `set_tempo` event of the file."""

    def __init__(self, midi_file: mido.MidiFile) -> None:
        self.ticks_per_beat = midi_file.ticks_per_beat
        changes: dict[int, int] = {0: MIDI_TEMPO}
        for track in midi_file.tracks:
            tick = 0
            for msg in track:
                tick += msg.time
                if msg.type == "set_tempo":
                    changes[tick] = msg.tempo
        self._ticks = sorted(changes)
        self._tempos = [changes[t] for t in self._ticks]
        self._seconds = [0.0]
        for i in range(1, len(self._ticks)):
            span = self._ticks[i] - self._ticks[i - 1]
            self._seconds.append(self._seconds[-1] + self._span_seconds(span, self._tempos[i - 1]))

    def _span_seconds(self, ticks: int, tempo: int) -> float:
        return ticks * tempo / (1_000_000 * self.ticks_per_beat)

    def seconds(self, tick: int) -> float:
        i = bisect.bisect_right(self._ticks, tick) - 1
        return self._seconds[i] + self._span_seconds(tick - self._ticks[i], self._tempos[i])


class ChannelPrograms:
    """Program changes of every track, by channel and absolute tick."""

    def __init__(self, midi_file: mido.MidiFile) -> None:
        changes: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for track in midi_file.tracks:
            tick = 0
            for msg in track:
                tick += msg.time
                if msg.type == "program_change":
                    changes[msg.channel].append((tick, msg.program))
        self._ticks: dict[int, list[int]] = {}
        self._programs: dict[int, list[int]] = {}
        for channel, events in changes.items():
            events.sort(key=lambda e: e[0])  # stable: same-tick changes keep track order
            self._ticks[channel] = [t for t, _ in events]
            self._programs[channel] = [p for _, p in events]

    def at(self, channel: int, tick: int) -> int:
        """The last program set on `channel` by any track at or before `tick`, else 0."""
        ticks = self._ticks.get(channel)
        if not ticks:
            return 0
        i = bisect.bisect_right(ticks, tick) - 1
        return self._programs[channel][i] if i >= 0 else 0


def _run_config_meta(track: mido.MidiTrack) -> dict | None:
    for msg in track:
        if msg.type == "text":
            try:
                meta = orjson.loads(msg.text)
            except orjson.JSONDecodeError:
                continue
            if isinstance(meta, dict):
                return meta
    return None


def parse_midi(data: bytes, taxonomy: InstrumentTaxonomy | None = None) -> MidiScore:
    """Parses a type 0/1 Standard MIDI File into per-class note lists.

    Notes take the class of the program active on their channel at onset time: the track's own
    program change for that channel if it made one, otherwise the latest one any track made on the
    channel. Channel 10 always feeds the drum class. Note-ons and note-offs are paired first-in
    first-out per (channel, pitch), a zero-velocity note-on counts as a note-off, and notes still
    sounding at the end of their track are closed there and counted in `dangling_notes`.
    A JSON object in a text event of the first track is returned as `meta`.
    """
    taxonomy = taxonomy or default_taxonomy()
    buffer = io.BytesIO(data)
    try:
        midi_file = mido.MidiFile(file=buffer, clip=False)
    except (OSError, EOFError, ValueError, KeyError, IndexError, TypeError, struct.error) as e:
        raise MidiParseError(f"Malformed MIDI data: {e}", offset=buffer.tell())
    if midi_file.type not in (0, 1):
        raise MidiParseError(f"Unsupported SMF type {midi_file.type}", offset=8)

    tempo_map = TempoMap(midi_file)
    channel_programs = ChannelPrograms(midi_file)
    tracks: dict[int, NoteList] = defaultdict(list)
    dangling = dropped = 0

    def close(class_index: int, pitch: int, velocity: int, on_tick: int, off_tick: int) -> None:
        nonlocal dropped
        onset, offset = tempo_map.seconds(on_tick), tempo_map.seconds(off_tick)
        if not in_pitch_range(pitch) or offset <= onset:
            dropped += 1
            return
        tracks[class_index].append(
            NoteEvent(pitch=pitch, onset=onset, offset=offset, velocity=velocity, instrument=class_index)
        )

    for track in midi_file.tracks:
        programs: dict[int, int] = {}
        sounding: dict[tuple[int, int], deque] = defaultdict(deque)
        tick = 0
        for msg in track:
            tick += msg.time
            if msg.type == "program_change":
                programs[msg.channel] = msg.program
            elif msg.type == "note_on" and msg.velocity > 0:
                program = programs.get(msg.channel)
                if program is None:
                    program = channel_programs.at(msg.channel, tick)
                class_index = taxonomy.map_program(program, msg.channel == DRUM_CHANNEL)
                sounding[(msg.channel, msg.note)].append((tick, msg.velocity, class_index))
            elif msg.type in ("note_off", "note_on"):
                queue = sounding.get((msg.channel, msg.note))
                if queue:
                    on_tick, velocity, class_index = queue.popleft()
                    close(class_index, msg.note, velocity, on_tick, tick)

        for (_, pitch), queue in sounding.items():
            for on_tick, velocity, class_index in queue:
                dangling += 1
                close(class_index, pitch, velocity, on_tick, tick)

    if dangling:
        logger.warning(f"Closed {dangling} dangling notes at end of track")
    if dropped:
        logger.warning(f"Dropped {dropped} notes outside the 88-key range or with zero duration")

    return MidiScore(
        {k: sort_notes(v) for k, v in sorted(tracks.items())},
        dangling_notes=dangling,
        dropped_notes=dropped,
        meta=_run_config_meta(midi_file.tracks[0]) if midi_file.tracks else None,
    )


def _seconds_to_tick(seconds: float) -> int:
    ticks_per_second = MIDI_TICKS_PER_BEAT * 1_000_000 / MIDI_TEMPO
    return int(seconds * ticks_per_second + 0.5)


def write_midi(
    tracks: dict[int, NoteList], taxonomy: InstrumentTaxonomy | None = None, meta: dict | None = None
) -> bytes:
    """Writes an SMF type 1 file at 120 BPM / 480 ticks per quarter with one track per class.

    `meta` is stored as JSON in a text event at the start of the first track.
    """
    taxonomy = taxonomy or default_taxonomy()
    midi_file = mido.MidiFile(type=1, ticks_per_beat=MIDI_TICKS_PER_BEAT)

    melodic = 0
    for class_index in sorted(tracks):
        instrument = taxonomy.classes[class_index]
        if class_index == DRUM_CLASS_INDEX:
            channel = DRUM_CHANNEL
        else:
            channel = MELODIC_CHANNELS[melodic % len(MELODIC_CHANNELS)]
            melodic += 1

        events: list[tuple[int, int, mido.Message]] = []
        for note in tracks[class_index]:
            on_tick = _seconds_to_tick(note.onset)
            off_tick = max(_seconds_to_tick(note.offset), on_tick + 1)
            note_on = mido.Message("note_on", channel=channel, note=note.pitch, velocity=note.velocity)
            events.append((on_tick, 1, note_on))
            events.append((off_tick, 0, mido.Message("note_off", channel=channel, note=note.pitch, velocity=0)))
        events.sort(key=lambda e: (e[0], e[1]))

        track = mido.MidiTrack()
        track.append(mido.MetaMessage("track_name", name=instrument.name, time=0))
        track.append(mido.MetaMessage("set_tempo", tempo=MIDI_TEMPO, time=0))
        track.append(mido.Message("program_change", channel=channel, program=instrument.first_program, time=0))
        last_tick = 0
        for tick, _, msg in events:
            track.append(msg.copy(time=tick - last_tick))
            last_tick = tick
        track.append(mido.MetaMessage("end_of_track", time=0))
        midi_file.tracks.append(track)

    if meta is not None:
        if not midi_file.tracks:
            midi_file.tracks.append(mido.MidiTrack([mido.MetaMessage("end_of_track", time=0)]))
        text = orjson.dumps(meta, option=orjson.OPT_SORT_KEYS).decode()
        midi_file.tracks[0].insert(0, mido.MetaMessage("text", text=text, time=0))

    buffer = io.BytesIO()
    midi_file.save(file=buffer)
    logger.debug(f"Wrote MIDI file with {len(midi_file.tracks)} tracks")
    return buffer.getvalue()
