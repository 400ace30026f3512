import numpy as np

from core.constants import OFFSET_MIN_TOLERANCE, OFFSET_RATIO, ONSET_TOLERANCE, SAMPLE_RATE
from core.dsp import AudioClip
from core.score import NoteEvent, NoteList


def sine(frequency: float = 440.0, seconds: float = 1.0, sample_rate: int = SAMPLE_RATE, amplitude: float = 0.5):
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return AudioClip(amplitude * np.sin(2 * np.pi * frequency * t), sample_rate)


def noise(seconds: float = 1.0, seed: int = 0, sample_rate: int = SAMPLE_RATE) -> AudioClip:
    rng = np.random.default_rng(seed)
    return AudioClip(0.1 * rng.standard_normal(int(seconds * sample_rate)), sample_rate)


def note(pitch: int, onset: float, offset: float, instrument: int = 0) -> NoteEvent:
    return NoteEvent(pitch=pitch, onset=onset, offset=offset, instrument=instrument)


def random_notes(rng: np.random.Generator, max_notes: int = 10) -> NoteList:
    """Notes on a 10 ms grid over a few pitches, dense enough for many competing matches."""
    notes = []
    for _ in range(rng.integers(0, max_notes + 1)):
        onset = int(rng.integers(0, 60)) / 100
        duration = int(rng.integers(5, 60)) / 100
        notes.append(note(int(rng.choice([60, 61, 62])), onset, round(onset + duration, 2)))
    return notes


def _admissible(ref: NoteEvent, est: NoteEvent, with_offset: bool) -> bool:
    if ref.pitch != est.pitch:
        return False
    if np.around(abs(ref.onset - est.onset), decimals=4) > ONSET_TOLERANCE:
        return False
    if with_offset:
        tolerance = max(OFFSET_RATIO * (ref.offset - ref.onset), OFFSET_MIN_TOLERANCE)
        return np.around(abs(ref.offset - est.offset), decimals=4) <= tolerance
    return True


def exhaustive_match_count(ref: NoteList, est: NoteList, with_offset: bool = False) -> int:
    """Largest injective pairing of admissible notes, by search over every subset of used estimates."""
    edges = [[_admissible(r, e, with_offset) for e in est] for r in ref]
    best: dict[tuple[int, int], int] = {}

    def search(i: int, used: int) -> int:
        if i == len(ref):
            return 0
        key = (i, used)
        if key not in best:
            result = search(i + 1, used)
            for j in range(len(est)):
                if edges[i][j] and not used & (1 << j):
                    result = max(result, 1 + search(i + 1, used | (1 << j)))
            best[key] = result
        return best[key]

    return search(0, 0)
