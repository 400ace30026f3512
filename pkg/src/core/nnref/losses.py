from typing import NamedTuple

import torch

from core.constants import BCE_EPSILON


class LossBreakdown(NamedTuple):
    ir: float
    t: float
    mss: float
    total: float


def _require_same_shape(name: str, prediction: torch.Tensor, target: torch.Tensor) -> None:
    if prediction.shape != target.shape:
        raise ValueError(f"{name}: prediction {list(prediction.shape)} and target {list(target.shape)} differ")


def bce(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7]."""
    _require_same_shape("bce", prediction, target)
    p = prediction.double().clamp(BCE_EPSILON, 1.0 - BCE_EPSILON)
    y = target.double()
    return -(y * torch.log(p) + (1.0 - y) * torch.log1p(-p)).mean()


def recognition_loss(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return bce(prediction, target)


def transcription_loss(
    onset: torch.Tensor, frame: torch.Tensor, onset_target: torch.Tensor, frame_target: torch.Tensor
) -> torch.Tensor:
    return bce(onset, onset_target) + bce(frame, frame_target)


def separation_loss(estimate: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean squared error over waveform samples."""
    _require_same_shape("mse", estimate, target)
    return ((estimate.double() - target.double()) ** 2).mean()


def losses(predictions: dict[str, torch.Tensor], targets: dict[str, torch.Tensor]) -> LossBreakdown:
    """L = L_IR + L_T + L_MSS, unweighted.

    Both dicts are keyed by `instruments`, `onset`, `frame` and `waveform`.
    """
    l_ir = float(recognition_loss(predictions["instruments"], targets["instruments"]))
    l_t = float(transcription_loss(predictions["onset"], predictions["frame"], targets["onset"], targets["frame"]))
    l_mss = float(separation_loss(predictions["waveform"], targets["waveform"]))
    return LossBreakdown(l_ir, l_t, l_mss, l_ir + l_t + l_mss)
