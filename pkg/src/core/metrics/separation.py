from collections import defaultdict
from typing import Hashable, Mapping

import numpy as np

from core.constants import SDR_CAP_DB
from core.dsp import AudioClip
from core.metrics.errors import MetricError
from core.schemas.metrics import SdrAggregates


def sdr(reference: AudioClip, estimate: AudioClip) -> float | None:
    """10·log10(‖s‖² / ‖s - ŝ‖²) in float64, capped at +100 dB.

    Returns None (undefined) for a silent reference.
    """
    if reference.sample_rate != estimate.sample_rate:
        raise MetricError(f"Sample rates differ: {reference.sample_rate} vs {estimate.sample_rate}")
    if len(reference) != len(estimate):
        raise MetricError(f"Lengths differ: {len(reference)} vs {len(estimate)} samples")

    target = np.sum(reference.samples**2)
    if target == 0:
        return None
    error = np.sum((reference.samples - estimate.samples) ** 2)
    if error == 0:
        return SDR_CAP_DB
    return float(min(10 * np.log10(target / error), SDR_CAP_DB))


def sdr_aggregates(per: Mapping[tuple[Hashable, str | int], float | None]) -> SdrAggregates:
    """Source, piece and instrument means of the defined SDR values keyed by (piece, class)."""
    by_piece: dict[Hashable, list[float]] = defaultdict(list)
    by_instrument: dict[str | int, list[float]] = defaultdict(list)
    for (piece, instrument), value in per.items():
        if value is None:
            continue
        by_piece[piece].append(value)
        by_instrument[instrument].append(value)

    if not by_piece:
        raise MetricError("No defined SDR value to aggregate")

    return SdrAggregates(
        source=float(np.mean([v for values in by_piece.values() for v in values])),
        piece=float(np.mean([np.mean(values) for values in by_piece.values()])),
        instrument=float(np.mean([np.mean(values) for values in by_instrument.values()])),
    )
