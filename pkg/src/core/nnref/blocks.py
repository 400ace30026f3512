import torch
import torch.nn.functional as F
from torch import nn

from core.nnref.film import FiLM


def conv3x3(in_channels: int, out_channels: int, bias: bool = True) -> nn.Conv2d:
    return nn.Conv2d(in_channels, out_channels, kernel_size=(3, 3), stride=(1, 1), padding=(1, 1), bias=bias)


class ConvBlock(nn.Module):
    """Two 3×3 conv layers with BN + ReLU, (2, 2) average pooling, then dropout."""

    def __init__(self, in_channels: int, out_channels: int, dropout: float = 0.2) -> None:
        super().__init__()
        self.conv1 = conv3x3(in_channels, out_channels)
        self.bn1 = nn.BatchNorm2d(out_channels)
        self.conv2 = conv3x3(out_channels, out_channels)
        self.bn2 = nn.BatchNorm2d(out_channels)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.relu(self.bn1(self.conv1(x)))
        x = F.relu(self.bn2(self.conv2(x)))
        return self.dropout(F.avg_pool2d(x, kernel_size=(2, 2)))


class FiLMConvBlock(nn.Module):
    """Conditional conv block: conv-BN-ReLU, conv-BN, FiLM, ReLU, (2, 2) average pooling."""

    def __init__(self, in_channels: int, out_channels: int) -> None:
        super().__init__()
        self.conv1 = conv3x3(in_channels, out_channels)
        self.bn1 = nn.BatchNorm2d(out_channels)
        self.conv2 = conv3x3(out_channels, out_channels)
        self.bn2 = nn.BatchNorm2d(out_channels)
        self.film = FiLM(out_channels)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        x = F.relu(self.bn1(self.conv1(x)))
        x = F.relu(self.film(self.bn2(self.conv2(x)), cond))
        return F.avg_pool2d(x, kernel_size=(2, 2))


class EncoderBlock(nn.Module):
    """U-Net encoder block with bias-less convs; returns the pre-pooling skip and the pooled output."""

    def __init__(self, in_channels: int, out_channels: int) -> None:
        super().__init__()
        self.conv1 = conv3x3(in_channels, out_channels, bias=False)
        self.bn1 = nn.BatchNorm2d(out_channels)
        self.conv2 = conv3x3(out_channels, out_channels, bias=False)
        self.bn2 = nn.BatchNorm2d(out_channels)
        self.film = FiLM(out_channels)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = F.relu(self.bn1(self.conv1(x)))
        skip = F.relu(self.film(self.bn2(self.conv2(x)), cond))
        return skip, F.avg_pool2d(skip, kernel_size=(2, 2))


def match_size(x: torch.Tensor, reference: torch.Tensor) -> torch.Tensor:
    """Crops or zero-pads the last two axes of `x` to those of `reference`."""
    x = x[..., : reference.shape[2], : reference.shape[3]]
    pad_t = reference.shape[2] - x.shape[2]
    pad_f = reference.shape[3] - x.shape[3]
    if pad_t or pad_f:
        x = F.pad(x, (0, pad_f, 0, pad_t))
    return x


class DecoderBlock(nn.Module):
    """Transposed conv (3×3, stride 2) upsampling, skip concatenation, conv-BN-ReLU."""

    def __init__(self, in_channels: int, out_channels: int, skip_channels: int) -> None:
        super().__init__()
        self.upsample = nn.ConvTranspose2d(
            in_channels, out_channels, kernel_size=(3, 3), stride=(2, 2), padding=(0, 0), bias=False
        )
        self.bn1 = nn.BatchNorm2d(out_channels)
        self.conv = conv3x3(out_channels + skip_channels, out_channels, bias=False)
        self.bn2 = nn.BatchNorm2d(out_channels)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        x = F.relu(self.bn1(self.upsample(x)))
        x = torch.cat([match_size(x, skip), skip], dim=1)
        return F.relu(self.bn2(self.conv(x)))
