"""Deterministic fixtures with hand-computable metric values.

Shared by the test suite and `amtkit fixtures`, so every expected value below can be checked on disk too.
"""

from pathlib import Path

import numpy as np
import orjson
from loguru import logger

from core.constants import FRAMES_PER_SECOND, MIN_PITCH, N_PITCHES, NUM_CLASSES, SAMPLE_RATE, STEM_SEPARATOR
from core.container import write_container
from core.dsp import AudioClip, write_wav
from core.score import NoteEvent, NoteList, write_midi
from core.taxonomy import InstrumentTaxonomy, default_taxonomy

PIANO = 0
BASS = 8

# (piece, class) -> (reference pitches, number of matched estimates); every piece has five reference notes
TRANSCRIPTION_LAYOUT = {
    ("piece1", PIANO): ((60, 62, 64, 65, 67), 4),
    ("piece1", BASS): ((36, 38, 40, 41, 43), 3),
    ("piece2", PIANO): ((72, 74, 76, 77, 79), 1),
}
TRANSCRIPTION_EXPECTED = {
    "per": {("piece1", PIANO): 0.8, ("piece1", BASS): 0.6, ("piece2", PIANO): 0.2},
    "piece_wise_f1": 0.45,
    "instrument_wise_f1": 0.55,
    "flat_f1": 0.45,
}

SDR_LAYOUT = {("piece1", "acoustic_piano"): 2.0, ("piece1", "electric_bass"): 4.0, ("piece2", "acoustic_piano"): 6.0}
SDR_EXPECTED = {"source": 4.0, "piece": 4.5, "instrument": 4.0}

RECOGNITION_CLASSES = {
    PIANO: ([1, 1, 1, 0], [0.9, 0.8, 0.7, 0.1]),
    BASS: ([0, 1, 0, 0], [0.9, 0.8, 0.1, 0.1]),
}
RECOGNITION_EXPECTED = {"macro_map": 0.75, "weighted_map": 0.875}

SPIKE_PITCH = 60
SPIKE_ONSET_FRAME = 10
SPIKE_LAST_FRAME = 30


def _note_row(
    pitches: tuple[int, ...], instrument: int, wrong_pitch_base: int, n_correct: int
) -> tuple[NoteList, NoteList]:
    ref, est = [], []
    for i, pitch in enumerate(pitches):
        onset, offset = 0.5 * i, 0.5 * i + 0.4
        ref.append(NoteEvent(pitch=pitch, onset=onset, offset=offset, instrument=instrument))
        est_pitch = pitch if i < n_correct else wrong_pitch_base + i
        est.append(NoteEvent(pitch=est_pitch, onset=onset, offset=offset, instrument=instrument))
    return ref, est


def transcription_fixture() -> tuple[dict[str, dict[int, NoteList]], dict[str, dict[int, NoteList]]]:
    """Reference and estimated notes per piece and class, with F1 0.8 / 0.6 on piece1 and 0.2 on piece2.

    Wrong estimates use pitches no reference uses, so pooling instruments never creates extra matches.
    """
    ref: dict[str, dict[int, NoteList]] = {}
    est: dict[str, dict[int, NoteList]] = {}
    for (piece, instrument), (pitches, n_correct) in TRANSCRIPTION_LAYOUT.items():
        wrong_base = 90 if instrument == PIANO else 80
        ref_notes, est_notes = _note_row(pitches, instrument, wrong_base, n_correct)
        ref.setdefault(piece, {})[instrument] = ref_notes
        est.setdefault(piece, {})[instrument] = est_notes
    return ref, est


def sdr_fixture(
    seed: int = 0, seconds: float = 1.0
) -> tuple[dict[tuple[str, str], AudioClip], dict[tuple[str, str], AudioClip]]:
    """Reference stems and scaled copies `g·s` with |1 - g| = 10^(-SDR/20), both float32-exact."""
    rng = np.random.default_rng(seed)
    n = int(seconds * SAMPLE_RATE)
    refs, ests = {}, {}
    for key, target_db in SDR_LAYOUT.items():
        reference = (0.25 * rng.standard_normal(n)).astype(np.float32).astype(np.float64)
        gain = 1.0 - 10 ** (-target_db / 20)
        estimate = (gain * reference).astype(np.float32).astype(np.float64)
        refs[key] = AudioClip(reference, SAMPLE_RATE)
        ests[key] = AudioClip(estimate, SAMPLE_RATE)
    return refs, ests


def recognition_fixture() -> tuple[np.ndarray, np.ndarray]:
    """Four clips; piano is perfectly ranked (AP 1, support 3), bass ranks one negative first (AP 0.5)."""
    scores = np.zeros((4, NUM_CLASSES), dtype=np.float32)
    labels = np.zeros((4, NUM_CLASSES), dtype=np.float32)
    for index, (column_labels, column_scores) in RECOGNITION_CLASSES.items():
        labels[:, index] = column_labels
        scores[:, index] = column_scores
    return scores, labels


def spike_fixture(n_frames: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """A 0.9 onset spike at frame 10 and 0.8 frame activity on frames 10..30 of middle C: one note, 0.10-0.31 s."""
    column = SPIKE_PITCH - MIN_PITCH
    onset = np.zeros((n_frames, N_PITCHES), dtype=np.float32)
    frame = np.zeros((n_frames, N_PITCHES), dtype=np.float32)
    onset[SPIKE_ONSET_FRAME, column] = 0.9
    frame[SPIKE_ONSET_FRAME : SPIKE_LAST_FRAME + 1, column] = 0.8
    return onset, frame


def sine_mix(seconds: float = 10.0, frequencies: tuple[float, ...] = (220.0, 440.0, 659.25)) -> AudioClip:
    t = np.arange(int(seconds * SAMPLE_RATE)) / SAMPLE_RATE
    samples = sum(0.2 * np.sin(2 * np.pi * f * t) for f in frequencies)
    return AudioClip(samples, SAMPLE_RATE)


def stem_name(piece: str, class_name: str) -> str:
    return f"{piece}{STEM_SEPARATOR}{class_name}.wav"


def write_fixtures(out_dir: str | Path, taxonomy: InstrumentTaxonomy | None = None) -> dict:
    """Writes every fixture under `out_dir` with an `expected.json` of the values they are built to hit."""
    taxonomy = taxonomy or default_taxonomy()
    out = Path(out_dir)

    ref, est = transcription_fixture()
    for side, pieces in (("ref", ref), ("est", est)):
        directory = out / "transcription" / side
        directory.mkdir(parents=True, exist_ok=True)
        for piece, tracks in pieces.items():
            (directory / f"{piece}.mid").write_bytes(write_midi(tracks, taxonomy))

    refs, ests = sdr_fixture()
    for side, stems in (("ref", refs), ("est", ests)):
        directory = out / "separation" / side
        directory.mkdir(parents=True, exist_ok=True)
        for (piece, class_name), clip in stems.items():
            write_wav(directory / stem_name(piece, class_name), clip, subtype="FLOAT")

    recognition_dir = out / "recognition"
    recognition_dir.mkdir(parents=True, exist_ok=True)
    scores, labels = recognition_fixture()
    write_container(recognition_dir / "scores.jtz", scores, {"fixture": "recognition"})
    write_container(recognition_dir / "labels.jtz", labels, {"fixture": "recognition"})

    decode_dir = out / "decode"
    decode_dir.mkdir(parents=True, exist_ok=True)
    onset, frame = spike_fixture()
    write_container(decode_dir / "onset.jtz", onset, {"fixture": "spike"})
    write_container(decode_dir / "frame.jtz", frame, {"fixture": "spike"})

    write_wav(out / "mix.wav", sine_mix(), subtype="FLOAT")

    expected = {
        "transcription": {
            "per": {
                f"{piece}/{taxonomy.class_name(i)}": f1 for (piece, i), f1 in TRANSCRIPTION_EXPECTED["per"].items()
            },
            "piece_wise_f1": TRANSCRIPTION_EXPECTED["piece_wise_f1"],
            "instrument_wise_f1": TRANSCRIPTION_EXPECTED["instrument_wise_f1"],
            "flat_f1": TRANSCRIPTION_EXPECTED["flat_f1"],
        },
        "separation": SDR_EXPECTED,
        "recognition": RECOGNITION_EXPECTED,
        "decode": {
            "notes": 1,
            "pitch": SPIKE_PITCH,
            "onset": SPIKE_ONSET_FRAME / FRAMES_PER_SECOND,
            "offset": (SPIKE_LAST_FRAME + 1) / FRAMES_PER_SECOND,
        },
    }
    (out / "expected.json").write_bytes(orjson.dumps(expected, option=orjson.OPT_INDENT_2))
    logger.info(f"Wrote fixtures to {out}")
    return expected
