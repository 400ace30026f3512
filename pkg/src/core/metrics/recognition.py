from typing import Mapping, Sequence

import numpy as np
from loguru import logger
from sklearn.metrics import average_precision_score, precision_recall_fscore_support

from core.metrics.errors import MetricError
from core.schemas.metrics import PRF, MapAggregates, MultilabelF1


def average_precision(scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray) -> float | None:
    """Step-wise AP over the distinct score thresholds, ties counted together.

    Returns None (undefined) when there is no positive label.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise MetricError(f"Scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    if not np.isin(labels, (0, 1)).all():
        raise MetricError("Labels must be 0 or 1")
    if labels.sum() == 0:
        return None
    return float(average_precision_score(labels, scores))


def map_aggregates(per_instrument_ap: Mapping[int, tuple[float | None, int]]) -> MapAggregates:
    """Macro mAP (plain mean) and support-weighted mAP over the instruments with a defined AP."""
    defined = [(ap, count) for ap, count in per_instrument_ap.values() if ap is not None]
    if not defined:
        raise MetricError("No instrument has a defined average precision")
    aps = np.array([ap for ap, _ in defined])
    counts = np.array([count for _, count in defined], dtype=np.float64)
    weighted = float(np.sum(aps * counts) / counts.sum()) if counts.sum() > 0 else float(aps.mean())
    return MapAggregates(macro_map=float(aps.mean()), weighted_map=weighted)


def multilabel_f1(pred: np.ndarray, truth: np.ndarray) -> MultilabelF1:
    """Clip-level per-class F1 with macro (classes with positive support) and support-weighted means."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 2:
        raise MetricError(f"Predictions {pred.shape} and labels {truth.shape} must be equal B×C matrices")

    precision, recall, f1, support = precision_recall_fscore_support(truth, pred, average=None, zero_division=0)
    n_est = pred.sum(axis=0)
    n_match = (pred & truth).sum(axis=0)

    per_class: dict[int, PRF] = {}
    for c in range(truth.shape[1]):
        if support[c] == 0:
            per_class[c] = PRF(
                precision=None, recall=None, f1=None, n_ref=0, n_est=int(n_est[c]), n_match=int(n_match[c])
            )
            continue
        per_class[c] = PRF(
            precision=float(precision[c]) if n_est[c] else None,
            recall=float(recall[c]),
            f1=float(f1[c]),
            n_ref=int(support[c]),
            n_est=int(n_est[c]),
            n_match=int(n_match[c]),
        )

    supported = support > 0
    if not supported.any():
        logger.warning("No class has a positive label, multilabel F1 is undefined")
        return MultilabelF1(macro_f1=None, weighted_f1=None, per_class=per_class)
    macro = float(f1[supported].mean())
    weighted = float(np.sum(f1[supported] * support[supported]) / support[supported].sum())
    return MultilabelF1(macro_f1=macro, weighted_f1=weighted, per_class=per_class)
