"""Tensor container: `JTZ1\\n`, a one-line JSON header, a newline, then the raw little-endian payload."""

from pathlib import Path

import humanize
import numpy as np
import orjson
from loguru import logger

MAGIC = b"JTZ1\n"
DTYPES = {"f32": np.dtype("<f4"), "c64": np.dtype("<c8")}


class ContainerError(ValueError):
    pass


class TensorContainer:
    def __init__(self, array: np.ndarray, meta: dict | None = None) -> None:
        self.array = array
        self.meta = meta or {}

    @property
    def dtype_name(self) -> str:
        return "c64" if np.iscomplexobj(self.array) else "f32"

    def dumps(self) -> bytes:
        dtype = DTYPES[self.dtype_name]
        header = {"dtype": self.dtype_name, "shape": list(self.array.shape), "meta": self.meta}
        try:
            header_bytes = orjson.dumps(header, option=orjson.OPT_SERIALIZE_NUMPY)
        except orjson.JSONEncodeError as e:
            raise ContainerError(f"Container metadata is not JSON serializable: {e}")
        payload = np.ascontiguousarray(self.array, dtype=dtype).tobytes(order="C")
        return MAGIC + header_bytes + b"\n" + payload

    @classmethod
    def loads(cls, data: bytes) -> "TensorContainer":
        if not data.startswith(MAGIC):
            raise ContainerError("Not a tensor container (bad magic)")
        end = data.find(b"\n", len(MAGIC))
        if end < 0:
            raise ContainerError("Container header is not terminated")
        try:
            header = orjson.loads(data[len(MAGIC) : end])
        except orjson.JSONDecodeError as e:
            raise ContainerError(f"Container header is not valid JSON: {e}")

        if not isinstance(header, dict) or {"dtype", "shape", "meta"} - header.keys():
            raise ContainerError("Container header must have dtype, shape and meta")
        if header["dtype"] not in DTYPES:
            raise ContainerError(f"Unsupported dtype {header['dtype']!r}")
        shape = header["shape"]
        if not isinstance(shape, list) or not all(isinstance(d, int) and d >= 0 for d in shape):
            raise ContainerError(f"Invalid shape {shape!r}")

        dtype = DTYPES[header["dtype"]]
        payload = data[end + 1 :]
        expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if len(payload) != expected:
            raise ContainerError(f"Payload has {len(payload)} bytes, expected {expected} for shape {shape}")
        array = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
        return cls(array, header["meta"])


def write_container(path: str | Path, array: np.ndarray, meta: dict | None = None) -> None:
    data = TensorContainer(array, meta).dumps()
    Path(path).write_bytes(data)
    logger.info(f"Wrote {list(array.shape)} tensor to {path} ({humanize.naturalsize(len(data))})")


def read_container(path: str | Path) -> TensorContainer:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ContainerError(f"Could not read container {path}: {e}")
    return TensorContainer.loads(data)
