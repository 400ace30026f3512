from typing import NamedTuple

import torch
from torch import nn

from core.constants import NUM_CLASSES
from core.nnref.shapes import ShapeError


class FiLMParams(NamedTuple):
    gamma: torch.Tensor  # B×C
    beta: torch.Tensor  # B×C


def film_modulate(features: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor) -> torch.Tensor:
    """`gamma ⊙ features + beta`, broadcast over every axis after the channel axis."""
    batch, channels = features.shape[:2]
    if gamma.shape != (batch, channels) or beta.shape != (batch, channels):
        raise ShapeError(
            "film", f"gamma {list(gamma.shape)} / beta {list(beta.shape)} do not match features {list(features.shape)}"
        )
    view = (batch, channels) + (1,) * (features.ndim - 2)
    return gamma.view(view) * features + beta.view(view)


def film_gradients(
    features: torch.Tensor, gamma: torch.Tensor, beta: torch.Tensor, grad_out: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Analytical gradients of `film_modulate` with respect to features, gamma and beta."""
    batch, channels = features.shape[:2]
    view = (batch, channels) + (1,) * (features.ndim - 2)
    reduce = tuple(range(2, features.ndim))
    d_features = gamma.view(view) * grad_out
    d_gamma = (grad_out * features).sum(dim=reduce) if reduce else grad_out * features
    d_beta = grad_out.sum(dim=reduce) if reduce else grad_out
    return d_features, d_gamma, d_beta


class FiLM(nn.Module):
    """Per-channel affine conditioning from a 39-dim instrument condition.

    The projection predicts `gamma - 1` and `beta`, so a zero projection is the identity modulation.
    """

    def __init__(self, channels: int, condition_dim: int = NUM_CLASSES) -> None:
        super().__init__()
        self.channels = channels
        self.projection = nn.Linear(condition_dim, 2 * channels)

    def params(self, cond: torch.Tensor) -> FiLMParams:
        delta_gamma, beta = self.projection(cond).chunk(2, dim=-1)
        return FiLMParams(1.0 + delta_gamma, beta)

    def forward(self, features: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        if features.shape[1] != self.channels:
            raise ShapeError(
                "film", f"projection produces {self.channels} channels, features have {features.shape[1]}"
            )
        gamma, beta = self.params(cond)
        return film_modulate(features, gamma, beta)
