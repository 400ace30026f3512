import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.constants import DRUM_CLASS_INDEX, FRAMES_PER_SECOND, MAX_PITCH, MIN_PITCH, N_PITCHES

RollKind = Literal["onset", "frame", "combined"]


class NoteEvent(BaseModel):
    """A single instrument-tagged note."""

    model_config = ConfigDict(frozen=True)

    pitch: int = Field(ge=MIN_PITCH, le=MAX_PITCH)
    onset: float = Field(ge=0)
    offset: float
    velocity: int = Field(default=100, ge=1, le=127)
    instrument: int = Field(default=0, ge=0, le=DRUM_CLASS_INDEX)

    @model_validator(mode="after")
    def _check_interval(self) -> "NoteEvent":
        if not self.offset > self.onset:
            raise ValueError(f"Note offset {self.offset} must be after onset {self.onset}")
        return self

    @property
    def duration(self) -> float:
        return self.offset - self.onset


NoteList = list[NoteEvent]


def sort_notes(notes: NoteList) -> NoteList:
    return sorted(notes, key=lambda n: (n.onset, n.pitch, n.offset))


def in_pitch_range(pitch: int) -> bool:
    return MIN_PITCH <= pitch <= MAX_PITCH


def seconds_to_frame(seconds: float) -> int:
    """Round-half-up conversion to the 100 fps frame grid."""
    return math.floor(seconds * FRAMES_PER_SECOND + 0.5)


def frame_to_seconds(frame: int) -> float:
    return frame / FRAMES_PER_SECOND


class PianoRoll:
    """T×88 roll at 100 fps. Binary for `onset`/`frame`/`combined` targets."""

    def __init__(self, data: np.ndarray, kind: RollKind, instrument: int = 0, dropped: int = 0) -> None:
        if data.ndim != 2 or data.shape[1] != N_PITCHES:
            raise ValueError(f"Piano roll must be T×{N_PITCHES}, got {data.shape}")
        if not np.isin(data, (0, 1)).all():
            raise ValueError(f"{kind} roll must be binary")
        self.data = data
        self.kind = kind
        self.instrument = instrument
        self.dropped = dropped
        self.frame_rate = FRAMES_PER_SECOND

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        return f"PianoRoll(kind={self.kind!r}, instrument={self.instrument}, shape={self.data.shape})"


class Posteriorgram:
    """T×88 matrix of note probabilities for one instrument."""

    def __init__(self, data: np.ndarray, instrument: int = 0) -> None:
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 2 or data.shape[1] != N_PITCHES:
            raise ValueError(f"Posteriorgram must be T×{N_PITCHES}, got {data.shape}")
        if not np.all(np.isfinite(data)) or data.min(initial=0.0) < 0 or data.max(initial=0.0) > 1:
            raise ValueError("Posteriorgram entries must lie in [0, 1]")
        self.data = data
        self.instrument = instrument
        self.frame_rate = FRAMES_PER_SECOND

    @classmethod
    def from_roll(cls, roll: PianoRoll) -> "Posteriorgram":
        return cls(roll.data.astype(np.float32), instrument=roll.instrument)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        return f"Posteriorgram(instrument={self.instrument}, shape={self.data.shape})"
