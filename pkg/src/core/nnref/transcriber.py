from typing import NamedTuple, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from core.constants import N_MELS, N_PITCHES
from core.nnref.blocks import FiLMConvBlock
from core.nnref.shapes import ShapeError, Trace, condition_batch, record, require_input, require_poolable
from core.taxonomy import ConditionVector

TRANSCRIBER_CHANNELS = (48, 64, 96, 128)


class TranscriptionOutput(NamedTuple):
    onset: torch.Tensor  # Ŷ_onset
    frame_raw: torch.Tensor  # frame stack output before fusion
    frame: torch.Tensor  # Ŷ_frame


class AcousticStack(nn.Module):
    """Four FiLM conv blocks, linear+ReLU, a 256-unit biGRU and a sigmoid projection to 88 notes.

    Time resolution lost to pooling is restored by nearest-neighbour upsampling before the GRU.
    """

    def __init__(self, n_mels: int, channels: tuple[int, ...], hidden: int, gru_hidden: int) -> None:
        super().__init__()
        in_channels = [1] + list(channels[:-1])
        self.conv_blocks = nn.ModuleList(FiLMConvBlock(i, o) for i, o in zip(in_channels, channels))
        pooled_bins = n_mels // 2 ** len(channels)
        self.fc = nn.Linear(channels[-1] * pooled_bins, hidden)
        self.gru = nn.GRU(hidden, gru_hidden, num_layers=1, batch_first=True, bidirectional=True)
        self.out = nn.Linear(2 * gru_hidden, N_PITCHES)

    def forward(self, x: torch.Tensor, cond: torch.Tensor, name: str, trace: Trace | None = None) -> torch.Tensor:
        n_frames = x.shape[2]
        for i, block in enumerate(self.conv_blocks, start=1):
            stage = f"{name}.conv_block{i}"
            require_poolable(x, stage)
            x = block(x, cond)
            record(trace, stage, x)

        x = F.interpolate(x, size=(n_frames, x.shape[3]), mode="nearest")
        record(trace, f"{name}.upsample", x)
        x = x.permute(0, 2, 1, 3).flatten(2)
        x = F.relu(self.fc(x))
        x, _ = self.gru(x)
        record(trace, f"{name}.gru", x)
        x = torch.sigmoid(self.out(x))
        record(trace, f"{name}.output", x)
        return x


class TranscriberNet(nn.Module):
    """f_T: input batch-norm, frame and onset stacks, and a biGRU fusing both 88-note streams."""

    kind = "t"

    def __init__(
        self,
        n_mels: int = N_MELS,
        channels: tuple[int, ...] = TRANSCRIBER_CHANNELS,
        hidden: int = 768,
        gru_hidden: int = 256,
    ) -> None:
        super().__init__()
        self._architecture = dict(n_mels=n_mels, channels=list(channels), hidden=hidden, gru_hidden=gru_hidden)
        self.n_mels = n_mels
        self.input_bn = nn.BatchNorm2d(n_mels)
        self.frame_stack = AcousticStack(n_mels, channels, hidden, gru_hidden)
        self.onset_stack = AcousticStack(n_mels, channels, hidden, gru_hidden)
        # 88 + 88 = 176 fused features
        self.fusion_gru = nn.GRU(2 * N_PITCHES, gru_hidden, num_layers=1, batch_first=True, bidirectional=True)
        self.fusion_out = nn.Linear(2 * gru_hidden, N_PITCHES)

    def architecture(self) -> dict:
        return dict(self._architecture)

    def forward(self, x: torch.Tensor, cond: torch.Tensor, trace: Trace | None = None) -> TranscriptionOutput:
        require_input(x, 4, "input")
        if x.shape[3] != self.n_mels:
            raise ShapeError("input_bn", f"expected {self.n_mels} mel bins, got {x.shape[3]}")
        record(trace, "input", x)
        x = self.input_bn(x.transpose(1, 3)).transpose(1, 3)

        frame_raw = self.frame_stack(x, cond, "frame", trace)
        onset = self.onset_stack(x, cond, "onset", trace)

        fused = torch.cat([frame_raw, onset.detach()], dim=-1)
        record(trace, "fusion.concat", fused)
        fused, _ = self.fusion_gru(fused)
        frame = torch.sigmoid(self.fusion_out(fused))
        record(trace, "fusion.output", frame)
        return TranscriptionOutput(onset, frame_raw, frame)


def f_t_forward(
    net: TranscriberNet,
    mel: torch.Tensor,
    cond: ConditionVector | Sequence[ConditionVector] | torch.Tensor,
    trace: Trace | None = None,
) -> TranscriptionOutput:
    """B×1×T×229 log-mel and one condition per batch element -> (Ŷ_onset, Ŷ_frame_raw, Ŷ_frame), each B×T×88.
    """
    net.eval()
    with torch.inference_mode():
        return net(mel.float(), condition_batch(cond, mel.shape[0]), trace=trace)
