"""Weight files: a tensor container whose header meta is the manifest of named tensors.

The payload is every state-dict entry flattened to little-endian float32 and concatenated in manifest order.
Integer buffers (BatchNorm step counters) round-trip through float32 and are cast back on load.
"""

import math
from pathlib import Path

import numpy as np
import torch
from loguru import logger
from torch import nn

from core.container import ContainerError, read_container, write_container
from core.nnref.film import FiLM
from core.nnref.jointist import Jointist
from core.nnref.recognizer import RecognizerNet
from core.nnref.separator import SeparatorNet
from core.nnref.transcriber import TranscriberNet

WEIGHTS_FORMAT = "amtkit-weights"
WEIGHTS_VERSION = 1
NORM_LAYERS = (nn.BatchNorm2d, nn.LayerNorm)

Network = RecognizerNet | TranscriberNet | SeparatorNet | Jointist
NETWORKS: dict[str, type[nn.Module]] = {
    RecognizerNet.kind: RecognizerNet,
    TranscriberNet.kind: TranscriberNet,
    SeparatorNet.kind: SeparatorNet,
    Jointist.kind: Jointist,
}


class WeightsError(ValueError):
    def __init__(self, message: str, tensor: str | None = None) -> None:
        super().__init__(f"{message} (tensor {tensor!r})" if tensor else message)
        self.tensor = tensor


def build_network(kind: str, architecture: dict | None = None) -> Network:
    """Instantiates an untrained network of the given kind from its architecture hyper-parameters."""
    if kind not in NETWORKS:
        raise WeightsError(f"Unknown module kind {kind!r}, expected one of {sorted(NETWORKS)}")
    architecture = architecture or {}
    try:
        if kind == Jointist.kind:
            return Jointist(
                RecognizerNet(**architecture.get("ir", {})),
                TranscriberNet(**architecture.get("t", {})),
                SeparatorNet(**architecture.get("mss", {})),
            )
        return NETWORKS[kind](**architecture)
    except TypeError as e:
        raise WeightsError(f"Invalid architecture for module {kind!r}: {e}")


def init_weights(net: nn.Module, seed: int) -> nn.Module:
    """Seeded He-uniform initialization: U(±sqrt(6 / fan_in)) for matrices and kernels, zero biases,
    unit norm-layer scales."""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for module in net.modules():
            for name, param in module.named_parameters(recurse=False):
                if isinstance(module, NORM_LAYERS):
                    param.fill_(1.0 if name == "weight" else 0.0)
                elif param.ndim >= 2:
                    fan_in = math.prod(param.shape[1:])
                    bound = math.sqrt(6.0 / fan_in)
                    param.copy_(torch.rand(param.shape, generator=generator) * 2 * bound - bound)
                else:
                    param.zero_()
    logger.debug(f"Initialized {type(net).__name__} with seed {seed}")
    return net


def zero_weights(net: nn.Module) -> nn.Module:
    with torch.no_grad():
        for param in net.parameters():
            param.zero_()
    return net


def set_film_identity(net: nn.Module) -> nn.Module:
    """Zeroes every FiLM projection, so each conditioned layer sees gamma = 1 and beta = 0."""
    count = 0
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, FiLM):
                module.projection.weight.zero_()
                module.projection.bias.zero_()
                count += 1
    logger.debug(f"Set {count} FiLM layers to identity")
    return net


def _manifest(net: Network, seed: int | None) -> dict:
    tensors = [
        {"name": name, "shape": list(tensor.shape), "dtype": "i64" if not tensor.is_floating_point() else "f32"}
        for name, tensor in net.state_dict().items()
    ]
    return {
        "format": WEIGHTS_FORMAT,
        "version": WEIGHTS_VERSION,
        "module": net.kind,
        "architecture": net.architecture(),
        "seed": seed,
        "tensors": tensors,
    }


def save_weights(net: Network, path: str | Path, seed: int | None = None) -> None:
    state = net.state_dict()
    flat = [t.detach().cpu().reshape(-1).to(torch.float32).numpy() for t in state.values()]
    payload = np.concatenate(flat) if flat else np.zeros(0, dtype=np.float32)
    write_container(path, payload, _manifest(net, seed))
    logger.info(f"Saved {len(state)} {net.kind} tensors to {path}")


def load_weights(path: str | Path, kind: str | None = None) -> Network:
    """Rebuilds the network described by the manifest and loads its tensors.

    Raises:
        WeightsError: On an unreadable file or manifest, a module kind other than `kind`, or the first tensor
            whose name or shape differs from what the architecture expects.
    """
    try:
        container = read_container(path)
    except ContainerError as e:
        raise WeightsError(f"Invalid weight manifest in {path}: {e}")

    meta = container.meta
    if meta.get("format") != WEIGHTS_FORMAT or meta.get("version") != WEIGHTS_VERSION:
        raise WeightsError(f"{path} is not an {WEIGHTS_FORMAT} v{WEIGHTS_VERSION} file")
    if kind is not None and meta.get("module") != kind:
        raise WeightsError(f"{path} holds {meta.get('module')!r} weights, expected {kind!r}")

    net = build_network(meta["module"], meta.get("architecture"))
    expected = net.state_dict()
    stored = meta.get("tensors", [])

    for (name, tensor), entry in zip(expected.items(), stored):
        if entry["name"] != name:
            raise WeightsError(f"Expected tensor {name!r}, found {entry['name']!r}", tensor=name)
        if list(tensor.shape) != entry["shape"]:
            raise WeightsError(f"Shape {entry['shape']} in file, architecture expects {list(tensor.shape)}", name)
    if len(stored) != len(expected):
        missing = list(expected)[len(stored) :] or [e["name"] for e in stored[len(expected) :]]
        raise WeightsError(f"File has {len(stored)} tensors, architecture has {len(expected)}", tensor=missing[0])

    flat = container.array.reshape(-1)
    total = sum(t.numel() for t in expected.values())
    if flat.shape[0] != total:
        raise WeightsError(f"Payload holds {flat.shape[0]} values, manifest describes {total}")

    state = {}
    offset = 0
    for name, tensor in expected.items():
        chunk = flat[offset : offset + tensor.numel()].reshape(tensor.shape)
        state[name] = torch.from_numpy(chunk.copy()).to(tensor.dtype)
        offset += tensor.numel()
    net.load_state_dict(state)
    net.eval()
    logger.info(f"Loaded {meta['module']} weights from {path} (seed {meta.get('seed')})")
    return net
