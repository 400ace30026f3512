from collections import defaultdict
from typing import Hashable, Mapping

import mir_eval
import numpy as np

from core.constants import NUM_CLASSES, OFFSET_MIN_TOLERANCE, OFFSET_RATIO, ONSET_TOLERANCE
from core.metrics.errors import MetricError
from core.schemas.metrics import PRF, F1Aggregates
from core.score import NoteList

PieceClass = tuple[Hashable, int]


def _to_mir_eval(notes: NoteList) -> tuple[np.ndarray, np.ndarray]:
    intervals = np.array([[n.onset, n.offset] for n in notes], dtype=np.float64).reshape(-1, 2)
    pitches = mir_eval.util.midi_to_hz(np.array([n.pitch for n in notes], dtype=np.float64))
    return intervals, pitches


def match_count(ref: NoteList, est: NoteList, with_offset: bool = False) -> int:
    """Size of the maximum bipartite matching between admissible (ref, est) note pairs.

    A pair is admissible when the pitches are equal, the onsets lie within 50 ms, and with offsets enabled,
    the offsets lie within max(50 ms, 20% of the reference duration).
    """
    if not ref or not est:
        return 0
    ref_intervals, ref_pitches = _to_mir_eval(ref)
    est_intervals, est_pitches = _to_mir_eval(est)
    matching = mir_eval.transcription.match_notes(
        ref_intervals,
        ref_pitches,
        est_intervals,
        est_pitches,
        onset_tolerance=ONSET_TOLERANCE,
        offset_ratio=OFFSET_RATIO if with_offset else None,
        offset_min_tolerance=OFFSET_MIN_TOLERANCE,
    )
    return len(matching)


def note_prf(ref: NoteList, est: NoteList, with_offset: bool = False) -> PRF:
    """Note-wise precision, recall and F1.

    With no reference notes every field is undefined. With reference notes but no estimates, precision is
    undefined while recall and F1 are 0.
    """
    n_ref, n_est = len(ref), len(est)
    n_match = match_count(ref, est, with_offset)
    if n_ref == 0:
        return PRF(precision=None, recall=None, f1=None, n_ref=0, n_est=n_est, n_match=0)
    recall = n_match / n_ref
    if n_est == 0:
        return PRF(precision=None, recall=0.0, f1=0.0, n_ref=n_ref, n_est=0, n_match=0)
    precision = n_match / n_est
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PRF(precision=precision, recall=recall, f1=f1, n_ref=n_ref, n_est=n_est, n_match=n_match)


def f1_aggregates(
    per: Mapping[PieceClass, PRF],
    flat: Mapping[Hashable, PRF] | None = None,
    literal_denominator: bool = False,
) -> F1Aggregates:
    """Piece-wise, instrument-wise and flat F1 over the defined scores.

    `per` is keyed by (piece, class index); `flat` holds one instrument-agnostic score per piece. With
    `literal_denominator` the instrument-wise sum is divided by the full vocabulary size (39) instead of
    the number of instruments that have a defined score.
    """
    by_piece: dict[Hashable, list[float]] = defaultdict(list)
    by_instrument: dict[int, list[float]] = defaultdict(list)
    for (piece, instrument), prf in per.items():
        if prf.f1 is None:
            continue
        by_piece[piece].append(prf.f1)
        by_instrument[instrument].append(prf.f1)

    if not by_piece:
        raise MetricError("Every F1 score is undefined")

    piece_wise = float(np.mean([np.mean(scores) for scores in by_piece.values()]))
    instrument_means = [float(np.mean(scores)) for scores in by_instrument.values()]
    denominator = NUM_CLASSES if literal_denominator else len(instrument_means)
    instrument_wise = float(np.sum(instrument_means) / denominator)

    flat_scores = [prf.f1 for prf in (flat or {}).values() if prf.f1 is not None]
    flat_f1 = float(np.mean(flat_scores)) if flat_scores else None
    return F1Aggregates(flat_f1=flat_f1, piece_wise_f1=piece_wise, instrument_wise_f1=instrument_wise)


def undefined_count(scores: Mapping[Hashable, PRF]) -> int:
    return sum(1 for prf in scores.values() if prf.has_undefined)
