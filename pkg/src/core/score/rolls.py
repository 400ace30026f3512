import numpy as np
from loguru import logger

from core.constants import (
    DECODED_VELOCITY,
    FRAME_THRESHOLD,
    FRAMES_PER_SECOND,
    MIN_NOTE_DURATION,
    MIN_PITCH,
    N_PITCHES,
    ONSET_THRESHOLD,
)
from core.score.notes import (
    NoteEvent,
    NoteList,
    PianoRoll,
    Posteriorgram,
    frame_to_seconds,
    in_pitch_range,
    seconds_to_frame,
    sort_notes,
)


def notes_to_rolls(notes: NoteList, n_frames: int, instrument: int = 0) -> tuple[PianoRoll, PianoRoll]:
    """Renders the onset and frame training targets for one instrument.

    The frame roll covers rows `round(onset*100) .. round(offset*100) - 1`, the onset roll only the first of them.
    Rows at or beyond `n_frames` are clipped, and notes outside the 88-key range are dropped.
    """
    if n_frames <= 0:
        raise ValueError(f"Frame count must be positive, got {n_frames}")

    onset_roll = np.zeros((n_frames, N_PITCHES), dtype=np.uint8)
    frame_roll = np.zeros((n_frames, N_PITCHES), dtype=np.uint8)
    dropped = 0

    for note in notes:
        if not in_pitch_range(note.pitch):
            dropped += 1
            continue
        column = note.pitch - MIN_PITCH
        start = seconds_to_frame(note.onset)
        end = min(seconds_to_frame(note.offset), n_frames)
        if start < n_frames:
            onset_roll[start, column] = 1
        if start < end:
            frame_roll[start:end, column] = 1

    if dropped:
        logger.warning(f"Dropped {dropped} notes outside the 88-key range")

    return (
        PianoRoll(onset_roll, kind="onset", instrument=instrument, dropped=dropped),
        PianoRoll(frame_roll, kind="frame", instrument=instrument, dropped=dropped),
    )


def _onset_candidates(onsets: np.ndarray, threshold: float) -> np.ndarray:
    """Frames whose onset probability is above `threshold` and a strict local maximum of the curve.

    A flat top is not a strict maximum, so it yields no candidate.
    """
    previous = np.concatenate(([-np.inf], onsets[:-1]))
    following = np.concatenate((onsets[1:], [-np.inf]))
    return np.flatnonzero((onsets > threshold) & (onsets > previous) & (onsets > following))


def decode_notes(
    onset_post: Posteriorgram,
    frame_post: Posteriorgram,
    onset_threshold: float = ONSET_THRESHOLD,
    frame_threshold: float = FRAME_THRESHOLD,
    min_duration: float = MIN_NOTE_DURATION,
) -> NoteList:
    """Onset-filtered decoding: a note starts only at an onset peak and lasts while the frame
    probability stays at or above `frame_threshold`, up to the next onset peak of the same pitch.
    """
    if onset_post.data.shape != frame_post.data.shape:
        raise ValueError(f"Posteriorgram shapes differ: {onset_post.data.shape} vs {frame_post.data.shape}")

    n_frames = onset_post.n_frames
    min_frames = min_duration * FRAMES_PER_SECOND
    notes: NoteList = []

    for column in range(N_PITCHES):
        candidates = _onset_candidates(onset_post.data[:, column], onset_threshold)
        if candidates.size == 0:
            continue
        active = frame_post.data[:, column] >= frame_threshold
        boundaries = np.append(candidates[1:], n_frames)

        for start, limit in zip(candidates, boundaries):
            inactive = np.flatnonzero(~active[start:limit])
            end = start + inactive[0] if inactive.size else limit
            if end - start + 1e-9 < min_frames or end == start:
                continue
            notes.append(
                NoteEvent(
                    pitch=column + MIN_PITCH,
                    onset=frame_to_seconds(int(start)),
                    offset=frame_to_seconds(int(end)),
                    velocity=DECODED_VELOCITY,
                    instrument=onset_post.instrument,
                )
            )

    logger.debug(f"Decoded {len(notes)} notes for instrument {onset_post.instrument}")
    return sort_notes(notes)


def decode_roll(
    onset_post: Posteriorgram,
    frame_post: Posteriorgram,
    onset_threshold: float = ONSET_THRESHOLD,
    frame_threshold: float = FRAME_THRESHOLD,
    min_duration: float = MIN_NOTE_DURATION,
) -> PianoRoll:
    """The binary roll of the decoded notes (onset-filtered frame activity)."""
    notes = decode_notes(onset_post, frame_post, onset_threshold, frame_threshold, min_duration)
    _, frame_roll = notes_to_rolls(notes, onset_post.n_frames, instrument=onset_post.instrument)
    return PianoRoll(frame_roll.data, kind="combined", instrument=onset_post.instrument)
