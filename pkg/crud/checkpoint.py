import logging
import struct
from pathlib import Path
from typing import BinaryIO, Dict

import numpy as np

from core.exceptions import CheckpointFormatError

logger = logging.getLogger(__name__)

MAGIC = b"TBNK"
FORMAT_VERSION = 1


def _read_exact(handle: BinaryIO, size: int, what: str) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise CheckpointFormatError(f"truncated checkpoint while reading {what}")
    return data


class TensorRepository:
    """Named float64 tensors in the TBNK little-endian binary layout.

    Header: magic, u32 format version, u32 tensor count. Each tensor: u32 name
    length, UTF-8 name, u32 rank, rank u64 dimensions, then the row-major data.
    """

    def save(self, tensors: Dict[str, np.ndarray], path: Path) -> None:
        with Path(path).open("wb") as handle:
            handle.write(MAGIC)
            handle.write(struct.pack("<II", FORMAT_VERSION, len(tensors)))
            for name, value in tensors.items():
                encoded = name.encode("utf-8")
                value = np.ascontiguousarray(value, dtype="<f8")
                handle.write(struct.pack("<I", len(encoded)))
                handle.write(encoded)
                handle.write(struct.pack("<I", value.ndim))
                handle.write(struct.pack(f"<{value.ndim}Q", *value.shape))
                handle.write(value.tobytes())
        logger.debug("Wrote %d tensors to %s", len(tensors), path)

    def load(self, path: Path) -> Dict[str, np.ndarray]:
        path = Path(path)
        if not path.exists():
            raise CheckpointFormatError(f"checkpoint file {path} does not exist")
        tensors: Dict[str, np.ndarray] = {}
        with path.open("rb") as handle:
            if _read_exact(handle, 4, "magic") != MAGIC:
                raise CheckpointFormatError(f"{path} is not a TBNK checkpoint")
            version, count = struct.unpack("<II", _read_exact(handle, 8, "header"))
            if version != FORMAT_VERSION:
                raise CheckpointFormatError(f"unsupported checkpoint format version {version}")
            for _ in range(count):
                (name_length,) = struct.unpack("<I", _read_exact(handle, 4, "name length"))
                try:
                    name = _read_exact(handle, name_length, "name").decode("utf-8")
                except UnicodeDecodeError:
                    raise CheckpointFormatError("tensor name is not valid UTF-8") from None
                if name in tensors:
                    raise CheckpointFormatError(f"duplicate tensor '{name}'")
                (rank,) = struct.unpack("<I", _read_exact(handle, 4, f"rank of {name}"))
                shape = struct.unpack(f"<{rank}Q", _read_exact(handle, 8 * rank, f"shape of {name}"))
                size = int(np.prod(shape, dtype=np.int64)) if rank else 1
                data = _read_exact(handle, 8 * size, f"data of {name}")
                tensors[name] = np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(shape)
            if handle.read(1):
                raise CheckpointFormatError("trailing bytes after the last tensor")
        return tensors
