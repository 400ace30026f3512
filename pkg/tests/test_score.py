import io

import mido
import numpy as np
import pytest
from utils import note

from core.constants import DRUM_CLASS_INDEX, MIN_PITCH
from core.fixtures import spike_fixture
from core.score import (
    MidiParseError,
    NoteEvent,
    PianoRoll,
    Posteriorgram,
    decode_notes,
    decode_roll,
    notes_to_rolls,
    parse_midi,
    write_midi,
)

C4 = 60 - MIN_PITCH
TICK = 1 / 960


def midi_bytes(*tracks: list[mido.Message | mido.MetaMessage], ticks_per_beat: int = 480) -> bytes:
    midi_file = mido.MidiFile(type=1, ticks_per_beat=ticks_per_beat)
    for messages in tracks:
        midi_file.tracks.append(mido.MidiTrack(messages))
    buffer = io.BytesIO()
    midi_file.save(file=buffer)
    return buffer.getvalue()


class TestNoteEvent:
    @pytest.mark.parametrize(
        "fields",
        [
            {"pitch": 20, "onset": 0.0, "offset": 1.0},
            {"pitch": 109, "onset": 0.0, "offset": 1.0},
            {"pitch": 60, "onset": 1.0, "offset": 1.0},
            {"pitch": 60, "onset": -0.1, "offset": 1.0},
            {"pitch": 60, "onset": 0.0, "offset": 1.0, "velocity": 0},
        ],
    )
    def test_invalid(self, fields):
        with pytest.raises(ValueError):
            NoteEvent(**fields)


class TestNotesToRolls:
    def test_single_note(self):
        onset, frame = notes_to_rolls([note(60, 0.10, 0.50)], 100)
        assert np.flatnonzero(frame.data[:, C4]).tolist() == list(range(10, 50))
        assert np.flatnonzero(onset.data[:, C4]).tolist() == [10]
        assert frame.data.sum() == 40 and onset.data.sum() == 1

    def test_empty(self):
        onset, frame = notes_to_rolls([], 50)
        assert not onset.data.any() and not frame.data.any()
        assert onset.data.shape == frame.data.shape == (50, 88)

    def test_clipped_at_the_end(self):
        onset, frame = notes_to_rolls([note(60, 0.999, 2.0)], 100)
        assert not onset.data.any()
        assert not frame.data.any()

        onset, frame = notes_to_rolls([note(60, 0.95, 2.0)], 100)
        assert np.flatnonzero(frame.data[:, C4]).tolist() == list(range(95, 100))
        assert onset.data[95, C4] == 1

    def test_onset_within_frame(self):
        rng = np.random.default_rng(0)
        notes = [note(int(rng.integers(21, 109)), k / 10, k / 10 + 0.05 + rng.random()) for k in range(30)]
        onset, frame = notes_to_rolls(notes, 400)
        assert np.all(onset.data <= frame.data)

    def test_invalid_length(self):
        with pytest.raises(ValueError):
            notes_to_rolls([], 0)


class TestDecode:
    def test_spike(self):
        onset, frame = spike_fixture()
        notes = decode_notes(Posteriorgram(onset), Posteriorgram(frame))
        assert len(notes) == 1
        assert notes[0].pitch == 60
        assert notes[0].onset == pytest.approx(0.10)
        assert notes[0].offset == pytest.approx(0.31)
        assert notes[0].velocity == 100

    def test_zero(self):
        zeros = Posteriorgram(np.zeros((100, 88)))
        assert decode_notes(zeros, zeros) == []

    def test_frames_without_onsets(self):
        frame = np.zeros((100, 88))
        frame[10:50, C4] = 1.0
        assert decode_notes(Posteriorgram(np.zeros((100, 88))), Posteriorgram(frame)) == []

    def test_threshold_above_one(self):
        onset, frame = spike_fixture()
        assert decode_notes(Posteriorgram(onset), Posteriorgram(frame), onset_threshold=1.1) == []

    def test_onsets_are_strict_maxima(self):
        onset, frame = np.zeros((100, 88)), np.zeros((100, 88))
        onset[10:12, C4] = 0.9
        onset[40, C4], onset[41, C4] = 0.8, 0.9
        frame[10:70, C4] = 0.9
        notes = decode_notes(Posteriorgram(onset), Posteriorgram(frame))
        assert [(n.onset, n.offset) for n in notes] == [pytest.approx((0.41, 0.70))]

    def test_short_notes_are_discarded(self):
        onset, frame = np.zeros((100, 88)), np.zeros((100, 88))
        onset[10, C4] = 0.9
        frame[10:13, C4] = 0.9
        assert decode_notes(Posteriorgram(onset), Posteriorgram(frame), min_duration=0.05) == []
        assert len(decode_notes(Posteriorgram(onset), Posteriorgram(frame), min_duration=0.03)) == 1

    def test_next_onset_ends_the_note(self):
        onset, frame = np.zeros((100, 88)), np.zeros((100, 88))
        onset[10, C4] = onset[40, C4] = 0.9
        frame[10:70, C4] = 0.9
        notes = decode_notes(Posteriorgram(onset), Posteriorgram(frame))
        assert [(n.onset, n.offset) for n in notes] == [pytest.approx((0.10, 0.40)), pytest.approx((0.40, 0.70))]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            decode_notes(Posteriorgram(np.zeros((10, 88))), Posteriorgram(np.zeros((11, 88))))

    def test_grid_aligned_round_trip(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            notes = []
            for pitch in rng.choice(np.arange(21, 109), size=5, replace=False):
                start = 0
                for _ in range(3):
                    start += int(rng.integers(0, 20))
                    length = int(rng.integers(5, 30))
                    notes.append(note(int(pitch), start / 100, (start + length) / 100))
                    start += length
            onset, frame = notes_to_rolls(notes, 400)
            decoded = decode_notes(Posteriorgram.from_roll(onset), Posteriorgram.from_roll(frame))
            expected = sorted(notes, key=lambda n: (n.onset, n.pitch, n.offset))
            assert [(n.pitch, n.onset, n.offset) for n in decoded] == [
                (n.pitch, pytest.approx(n.onset), pytest.approx(n.offset)) for n in expected
            ]

    def test_no_overlap_per_pitch(self):
        rng = np.random.default_rng(5)
        onset, frame = rng.random((300, 88)), rng.random((300, 88))
        notes = decode_notes(Posteriorgram(onset), Posteriorgram(frame), min_duration=0.0)
        for pitch in {n.pitch for n in notes}:
            same = sorted((n for n in notes if n.pitch == pitch), key=lambda n: n.onset)
            assert all(a.offset <= b.onset + 1e-9 for a, b in zip(same, same[1:]))

    def test_decode_roll(self):
        onset, frame = spike_fixture()
        roll = decode_roll(Posteriorgram(onset, instrument=3), Posteriorgram(frame, instrument=3))
        assert isinstance(roll, PianoRoll)
        assert roll.kind == "combined" and roll.instrument == 3
        assert np.flatnonzero(roll.data[:, C4]).tolist() == list(range(10, 31))


class TestMidi:
    def test_single_note(self, taxonomy):
        data = midi_bytes(
            [
                mido.Message("program_change", program=0, time=0),
                mido.Message("note_on", note=60, velocity=90, time=96),
                mido.Message("note_off", note=60, velocity=0, time=384),
            ]
        )
        score = parse_midi(data, taxonomy)
        assert list(score.tracks) == [taxonomy.class_index("acoustic_piano")]
        (event,) = score.tracks[0]
        assert (event.pitch, event.velocity) == (60, 90)
        assert event.onset == pytest.approx(0.10)
        assert event.offset == pytest.approx(0.50)

    def test_tempo_change(self, taxonomy):
        data = midi_bytes(
            [
                mido.MetaMessage("set_tempo", tempo=500000, time=0),
                mido.MetaMessage("set_tempo", tempo=1000000, time=480),
                mido.MetaMessage("end_of_track", time=0),
            ],
            [
                mido.Message("note_on", note=60, velocity=90, time=480),
                mido.Message("note_on", note=60, velocity=0, time=480),
            ],
        )
        (event,) = parse_midi(data, taxonomy).tracks[0]
        assert event.onset == pytest.approx(0.5)
        assert event.offset == pytest.approx(1.5)

    def test_empty_track(self, taxonomy):
        assert parse_midi(midi_bytes([]), taxonomy).tracks == {}

    def test_drum_channel(self, taxonomy):
        data = midi_bytes(
            [
                mido.Message("program_change", channel=9, program=40, time=0),
                mido.Message("note_on", channel=9, note=36, velocity=100, time=0),
                mido.Message("note_off", channel=9, note=36, time=100),
            ]
        )
        assert list(parse_midi(data, taxonomy).tracks) == [DRUM_CLASS_INDEX]

    def test_program_active_at_onset(self, taxonomy):
        data = midi_bytes(
            [
                mido.Message("program_change", program=0, time=0),
                mido.Message("note_on", note=60, velocity=90, time=0),
                mido.Message("program_change", program=33, time=10),
                mido.Message("note_on", note=62, velocity=90, time=0),
                mido.Message("note_off", note=60, time=100),
                mido.Message("note_off", note=62, time=0),
            ]
        )
        tracks = parse_midi(data, taxonomy).tracks
        assert [n.pitch for n in tracks[taxonomy.class_index("acoustic_piano")]] == [60]
        assert [n.pitch for n in tracks[taxonomy.class_index("electric_bass")]] == [62]

    def test_program_set_in_another_track(self, taxonomy):
        data = midi_bytes(
            [
                mido.MetaMessage("set_tempo", tempo=500000, time=0),
                mido.Message("program_change", channel=0, program=33, time=480),
            ],
            [
                mido.Message("note_on", note=60, velocity=90, time=0),
                mido.Message("note_off", note=60, time=240),
                mido.Message("note_on", note=62, velocity=90, time=720),
                mido.Message("note_off", note=62, time=240),
            ],
        )
        tracks = parse_midi(data, taxonomy).tracks
        assert [n.pitch for n in tracks[taxonomy.class_index("acoustic_piano")]] == [60]
        assert [n.pitch for n in tracks[taxonomy.class_index("electric_bass")]] == [62]

    def test_own_program_wins_over_other_tracks(self, taxonomy):
        data = midi_bytes(
            [mido.Message("program_change", channel=0, program=33, time=0)],
            [
                mido.Message("program_change", channel=0, program=0, time=0),
                mido.Message("note_on", note=60, velocity=90, time=10),
                mido.Message("note_off", note=60, time=100),
            ],
        )
        assert list(parse_midi(data, taxonomy).tracks) == [taxonomy.class_index("acoustic_piano")]

    def test_fifo_pairing(self, taxonomy):
        data = midi_bytes(
            [
                mido.Message("note_on", note=60, velocity=10, time=0),
                mido.Message("note_on", note=60, velocity=20, time=96),
                mido.Message("note_off", note=60, time=96),
                mido.Message("note_off", note=60, time=96),
            ]
        )
        notes = parse_midi(data, taxonomy).tracks[0]
        assert [(n.velocity, round(n.onset, 3), round(n.offset, 3)) for n in notes] == [(10, 0.0, 0.2), (20, 0.1, 0.3)]

    def test_dangling_and_dropped(self, taxonomy, caplog):
        data = midi_bytes(
            [
                mido.Message("note_on", note=10, velocity=90, time=0),
                mido.Message("note_off", note=10, time=96),
                mido.Message("note_on", note=60, velocity=90, time=0),
                mido.MetaMessage("end_of_track", time=480),
            ]
        )
        score = parse_midi(data, taxonomy)
        assert score.dangling_notes == 1
        assert score.dropped_notes == 1
        (event,) = score.tracks[0]
        assert event.offset == pytest.approx(0.6)
        assert "dangling" in caplog.text

    @pytest.mark.parametrize("data", [b"", b"not a midi file", b"MThd\x00\x00\x00\x06\x00\x01"])
    def test_malformed(self, taxonomy, data):
        with pytest.raises(MidiParseError) as error:
            parse_midi(data, taxonomy)
        assert error.value.offset >= 0
        assert "byte offset" in str(error.value)

    def test_write_parse_round_trip(self, taxonomy):
        tracks = {
            0: [note(60, 0.10, 0.50), note(64, 0.25, 1.333)],
            8: [note(40, 0.0, 2.0, instrument=8)],
            DRUM_CLASS_INDEX: [note(36, 0.5, 0.6, instrument=DRUM_CLASS_INDEX)],
        }
        data = write_midi(tracks, taxonomy)
        midi_file = mido.MidiFile(file=io.BytesIO(data))
        assert midi_file.type == 1 and midi_file.ticks_per_beat == 480
        assert len(midi_file.tracks) == 3

        score = parse_midi(data, taxonomy)
        assert sorted(score.tracks) == sorted(tracks)
        for index, notes in tracks.items():
            parsed = score.tracks[index]
            assert [n.pitch for n in parsed] == [n.pitch for n in notes]
            for a, b in zip(parsed, notes):
                assert abs(a.onset - b.onset) <= TICK
                assert abs(a.offset - b.offset) <= TICK

    def test_write_empty(self, taxonomy):
        data = write_midi({}, taxonomy)
        assert data.startswith(b"MThd")
        assert parse_midi(data, taxonomy).tracks == {}
        assert parse_midi(data, taxonomy).meta is None

    def test_meta_is_echoed(self, taxonomy):
        meta = {"command": "decode", "onset_threshold": 0.4}
        data = write_midi({0: [note(60, 0.1, 0.5)]}, taxonomy, meta=meta)
        score = parse_midi(data, taxonomy)
        assert score.meta == meta
        assert [n.pitch for n in score.tracks[0]] == [60]
        assert parse_midi(write_midi({}, taxonomy, meta=meta), taxonomy).meta == meta
