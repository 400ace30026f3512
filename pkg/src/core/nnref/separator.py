from typing import Literal, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from core.constants import N_PITCHES, STFT_BINS
from core.nnref.blocks import DecoderBlock, EncoderBlock
from core.nnref.shapes import ShapeError, Trace, condition_batch, record, require_input, require_poolable
from core.taxonomy import ConditionVector

MergeMode = Literal["sum", "concat"]
FeatureKind = Literal["posteriorgram", "binary_roll"]

MERGE_MODES = ("sum", "concat")
FEATURE_KINDS = ("posteriorgram", "binary_roll")
ENCODER_CHANNELS = (32, 64, 128, 256, 384, 384)
DECODER_CHANNELS = (384, 384, 256, 128, 64, 32)


class SeparatorNet(nn.Module):
    """f_MSS: a FiLM-conditioned U-Net predicting a [0, 1] mask over the mixture STFT magnitude.

    The batch-normalized magnitude is merged with `g(roll)`, a linear 88 -> 513 projection of the
    transcription feature, by summation or by channel concatenation.
    """

    kind = "mss"

    def __init__(
        self,
        merge: MergeMode = "sum",
        n_bins: int = STFT_BINS,
        encoder_channels: tuple[int, ...] = ENCODER_CHANNELS,
        decoder_channels: tuple[int, ...] = DECODER_CHANNELS,
    ) -> None:
        super().__init__()
        if merge not in MERGE_MODES:
            raise ValueError(f"Unknown merge mode {merge!r}, expected one of {MERGE_MODES}")
        if len(decoder_channels) != len(encoder_channels):
            raise ValueError("Encoder and decoder must have the same depth")
        self._architecture = dict(
            merge=merge,
            n_bins=n_bins,
            encoder_channels=list(encoder_channels),
            decoder_channels=list(decoder_channels),
        )
        self.merge = merge
        self.n_bins = n_bins
        self.stft_bn = nn.BatchNorm2d(n_bins)
        self.roll_projection = nn.Linear(N_PITCHES, n_bins)

        in_channels = [1 if merge == "sum" else 2] + list(encoder_channels[:-1])
        self.encoder = nn.ModuleList(EncoderBlock(i, o) for i, o in zip(in_channels, encoder_channels))
        bottleneck_channels = encoder_channels[-1]
        self.bottleneck = nn.Sequential(
            nn.Conv2d(bottleneck_channels, bottleneck_channels, kernel_size=(2, 2), padding=(1, 1), bias=False),
            nn.BatchNorm2d(bottleneck_channels),
            nn.ReLU(),
        )
        decoder_in = [bottleneck_channels] + list(decoder_channels[:-1])
        skips = list(reversed(encoder_channels))
        self.decoder = nn.ModuleList(DecoderBlock(i, o, s) for i, o, s in zip(decoder_in, decoder_channels, skips))
        last = decoder_channels[-1]
        self.output_block = nn.Sequential(
            nn.Conv2d(last, last, kernel_size=(1, 1), padding=(0, 0), bias=False), nn.BatchNorm2d(last), nn.ReLU()
        )
        self.mask_head = nn.Conv2d(last, 1, kernel_size=(1, 1))

    def architecture(self) -> dict:
        return dict(self._architecture)

    def forward(
        self, magnitude: torch.Tensor, cond: torch.Tensor, roll: torch.Tensor, trace: Trace | None = None
    ) -> torch.Tensor:
        require_input(magnitude, 3, "input")
        if magnitude.shape[2] != self.n_bins:
            raise ShapeError("stft_bn", f"expected {self.n_bins} STFT bins, got {magnitude.shape[2]}")
        if roll.shape[:2] != magnitude.shape[:2] or roll.shape[2] != N_PITCHES:
            raise ShapeError("roll_projection", f"roll {list(roll.shape)} is not aligned to {list(magnitude.shape)}")
        record(trace, "input", magnitude)

        x = self.stft_bn(magnitude.unsqueeze(1).transpose(1, 3)).transpose(1, 3)
        g = self.roll_projection(roll).unsqueeze(1)
        x = x + g if self.merge == "sum" else torch.cat([x, g], dim=1)
        record(trace, f"merge.{self.merge}", x)

        skips = []
        for i, block in enumerate(self.encoder, start=1):
            stage = f"encoder{i}"
            require_poolable(x, stage)
            skip, x = block(x, cond)
            skips.append(skip)
            record(trace, stage, x)

        x = self.bottleneck(x)
        record(trace, "bottleneck", x)
        for i, (block, skip) in enumerate(zip(self.decoder, reversed(skips)), start=1):
            x = block(x, skip)
            record(trace, f"decoder{i}", x)

        x = self.output_block(x)
        record(trace, "output_block", x)
        mask = torch.sigmoid(self.mask_head(x)).squeeze(1)
        record(trace, "mask", mask)
        return mask


def align_frames(roll: torch.Tensor, n_frames: int) -> torch.Tensor:
    """Nearest-frame resampling of a B×T'×88 feature onto `n_frames` frames."""
    if roll.shape[1] == n_frames:
        return roll
    return F.interpolate(roll.transpose(1, 2), size=n_frames, mode="nearest").transpose(1, 2)


def f_mss_forward(
    net: SeparatorNet,
    magnitude: torch.Tensor,
    cond: ConditionVector | Sequence[ConditionVector] | torch.Tensor,
    roll_feature: torch.Tensor,
    feature_kind: FeatureKind = "posteriorgram",
    trace: Trace | None = None,
) -> torch.Tensor:
    """B×T×513 mixture magnitude, condition and B×T'×88 transcription feature -> B×T×513 mask."""
    if feature_kind not in FEATURE_KINDS:
        raise ValueError(f"Unknown feature kind {feature_kind!r}, expected one of {FEATURE_KINDS}")
    roll_feature = roll_feature.float()
    if roll_feature.min() < 0 or roll_feature.max() > 1:
        raise ValueError("Transcription features must lie in [0, 1]")
    if feature_kind == "binary_roll" and not bool(((roll_feature == 0) | (roll_feature == 1)).all()):
        raise ValueError("A binary roll must contain only 0 and 1")

    net.eval()
    with torch.inference_mode():
        roll_feature = align_frames(roll_feature, magnitude.shape[1])
        return net(magnitude.float(), condition_batch(cond, magnitude.shape[0]), roll_feature, trace=trace)
