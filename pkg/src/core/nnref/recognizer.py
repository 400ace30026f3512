import torch
from torch import nn

from core.constants import NUM_CLASSES
from core.nnref.blocks import ConvBlock
from core.nnref.shapes import ShapeError, Trace, record, require_input, require_poolable

RECOGNIZER_CHANNELS = (64, 128, 256, 512, 1024, 2048)


class RecognizerNet(nn.Module):
    """f_IR: CNN front-end (six conv blocks) and a transformer encoder read out through a CLS token."""

    kind = "ir"

    def __init__(
        self,
        channels: tuple[int, ...] = RECOGNIZER_CHANNELS,
        d_model: int = 256,
        n_heads: int = 8,
        ffn_dim: int = 1024,
        n_layers: int = 4,
        max_frames: int = 1024,
        dropout: float = 0.2,
        n_classes: int = NUM_CLASSES,
    ) -> None:
        super().__init__()
        self._architecture = dict(
            channels=list(channels),
            d_model=d_model,
            n_heads=n_heads,
            ffn_dim=ffn_dim,
            n_layers=n_layers,
            max_frames=max_frames,
            dropout=dropout,
            n_classes=n_classes,
        )
        in_channels = [1] + list(channels[:-1])
        self.conv_blocks = nn.ModuleList(ConvBlock(i, o, dropout) for i, o in zip(in_channels, channels))
        self.projection = nn.Linear(channels[-1], d_model)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, d_model))
        self.pos_embedding = nn.Parameter(torch.zeros(1, max_frames + 1, d_model))
        layer = nn.TransformerEncoderLayer(d_model, n_heads, ffn_dim, dropout=0.1, batch_first=True)
        self.transformer = nn.TransformerEncoder(layer, n_layers, enable_nested_tensor=False)
        self.head = nn.Linear(d_model, n_classes)

    def architecture(self) -> dict:
        return dict(self._architecture)

    def forward(self, x: torch.Tensor, trace: Trace | None = None) -> torch.Tensor:
        require_input(x, 4, "input")
        record(trace, "input", x)
        for i, block in enumerate(self.conv_blocks, start=1):
            stage = f"conv_block{i}"
            require_poolable(x, stage)
            x = block(x)
            record(trace, stage, x)

        x = x.mean(dim=3).transpose(1, 2)  # B×T'×C
        x = self.projection(x)
        record(trace, "projection", x)

        n_positions = x.shape[1] + 1
        if n_positions > self.pos_embedding.shape[1]:
            raise ShapeError(
                "positional_embedding", f"{x.shape[1]} pooled frames exceed {self.pos_embedding.shape[1] - 1}"
            )
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embedding[:, :n_positions]
        x = self.transformer(x)
        record(trace, "transformer", x)

        probs = torch.sigmoid(self.head(x[:, 0]))
        record(trace, "output", probs)
        return probs


def f_ir_forward(net: RecognizerNet, mel: torch.Tensor, trace: Trace | None = None) -> torch.Tensor:
    """B×1×T×229 log-mel -> B×39 instrument probabilities (inference mode)."""
    net.eval()
    with torch.inference_mode():
        return net(mel.float(), trace=trace)
