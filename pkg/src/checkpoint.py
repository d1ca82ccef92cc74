"""
Checkpoint Format untuk CrowdCast

Layout file (semua integer little-endian):
    magic        4 byte  b"CCKP"
    version      uint32
    header_len   uint32, lalu header JSON utf-8 (sort_keys)
    count        uint32
    per blok:    name_len uint16, name utf-8, ndim uint8,
                 dims uint32 * ndim, data float64 '<f8' row-major
"""

import io
import json
import os
import struct
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from src.tensor_kernels import ParamStore
from src.utils import logger, CheckpointError

MAGIC = b"CCKP"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)


def save_checkpoint(path: str, store: ParamStore, header: Mapping[str, Any]) -> str:
    """
    Simpan parameter dan header ke file checkpoint

    Args:
        path: Path output
        store: ParamStore
        header: Metadata (dims, dropout, optimizer, seed, RunConfig)

    Returns:
        Path file
    """
    body = dict(header)
    body["format_version"] = FORMAT_VERSION
    header_bytes = json.dumps(body, sort_keys=True, default=_json_default).encode("utf-8")

    buffer = io.BytesIO()
    buffer.write(MAGIC)
    buffer.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
    buffer.write(header_bytes)
    buffer.write(struct.pack("<I", len(store.params)))
    for name, value in store.params.items():
        name_bytes = name.encode("utf-8")
        buffer.write(struct.pack("<H", len(name_bytes)))
        buffer.write(name_bytes)
        buffer.write(struct.pack("<B", value.ndim))
        buffer.write(struct.pack(f"<{value.ndim}I", *value.shape))
        buffer.write(np.ascontiguousarray(value, dtype="<f8").tobytes())

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(buffer.getvalue())

    logger.info(f"Saved checkpoint with {len(store.params)} tensors to {path}")
    return path


def load_checkpoint(path: str, expected: Optional[ParamStore] = None) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Baca file checkpoint

    Args:
        path: Path checkpoint
        expected: ParamStore acuan; bila diberikan, nama dan shape harus identik

    Returns:
        Tuple (header, dict nama -> array)
    """
    with open(path, "rb") as handle:
        data = handle.read()

    reader = io.BytesIO(data)
    if reader.read(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, header_len = _unpack(reader, "<II", path)
    if version not in SUPPORTED_VERSIONS:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header = json.loads(_read_exact(reader, header_len, path).decode("utf-8"))

    (count,) = _unpack(reader, "<I", path)
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = _unpack(reader, "<H", path)
        name = _read_exact(reader, name_len, path).decode("utf-8")
        (ndim,) = _unpack(reader, "<B", path)
        shape = _unpack(reader, f"<{ndim}I", path) if ndim else ()
        size = int(np.prod(shape)) if shape else 1
        raw = _read_exact(reader, size * 8, path)
        tensors[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    if reader.read(1):
        raise CheckpointError(f"{path}: trailing bytes after last tensor")

    if expected is not None:
        for name, shape in expected.shapes().items():
            if name not in tensors:
                raise CheckpointError(f"{path}: missing tensor {name!r}")
            if tensors[name].shape != shape:
                raise CheckpointError(
                    f"{path}: tensor {name!r} has shape {tensors[name].shape}, expected {shape}"
                )
        unknown = set(tensors) - set(expected.params)
        if unknown:
            raise CheckpointError(f"{path}: unexpected tensors {sorted(unknown)}")

    return header, tensors


def _unpack(reader: io.BytesIO, fmt: str, path: str) -> Tuple:
    return struct.unpack(fmt, _read_exact(reader, struct.calcsize(fmt), path))


def _read_exact(reader: io.BytesIO, n: int, path: str) -> bytes:
    chunk = reader.read(n)
    if len(chunk) != n:
        raise CheckpointError(f"{path}: truncated file")
    return chunk


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (tuple, set)):
        return list(value)
    raise TypeError(f"cannot serialise {type(value).__name__} in checkpoint header")
