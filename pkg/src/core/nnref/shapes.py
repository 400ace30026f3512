from typing import Sequence

import torch

from core.taxonomy import ConditionVector

Trace = list[tuple[str, tuple[int, ...]]]


class ShapeError(ValueError):
    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def record(trace: Trace | None, stage: str, x: torch.Tensor) -> None:
    if trace is not None:
        trace.append((stage, tuple(x.shape)))


def format_trace(trace: Trace) -> list[str]:
    width = max((len(stage) for stage, _ in trace), default=0)
    return [f"{stage:<{width}}  {list(shape)}" for stage, shape in trace]


def require_poolable(x: torch.Tensor, stage: str) -> None:
    """A (2, 2) average pool needs at least two frames and two bins left."""
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ShapeError(stage, f"input {list(x.shape)} is too small for another (2, 2) pooling")


def require_input(x: torch.Tensor, ndim: int, stage: str) -> None:
    if x.ndim != ndim:
        raise ShapeError(stage, f"expected a {ndim}-d tensor, got shape {list(x.shape)}")


def condition_batch(cond: ConditionVector | Sequence[ConditionVector] | torch.Tensor, batch: int) -> torch.Tensor:
    """Stacks one condition per batch element into a B×39 float tensor."""
    if isinstance(cond, torch.Tensor):
        tensor = cond.float()
        if tensor.ndim == 1:
            tensor = tensor.unsqueeze(0).expand(batch, -1)
    elif isinstance(cond, ConditionVector):
        tensor = cond.to_tensor().unsqueeze(0).expand(batch, -1)
    else:
        tensor = torch.stack([c.to_tensor() for c in cond])
    if tensor.shape[0] != batch:
        raise ShapeError("condition", f"got {tensor.shape[0]} conditions for a batch of {batch}")
    if bool((tensor.sum(dim=1) == 0).any()):
        raise ValueError("Every condition must select at least one instrument")
    return tensor
