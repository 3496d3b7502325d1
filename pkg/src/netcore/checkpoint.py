"""
Binary checkpoint format

    magic      4 bytes  b"PIQT"
    version    u32      format version
    header_len u32      length of the JSON header
    header     JSON     layout table, vector names, metadata
    n_params   u64      parameters per vector
    n_vectors  u32      number of stored vectors
    data       f64[n_vectors * n_params], little-endian

All vectors share the layout in the header.
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict

import numpy as np

from src.core.exceptions import ConfigurationError, RestoreError
from src.logging_config.logger import setup_logger
from src.netcore.params import ParameterLayout

logger = setup_logger(__name__)

MAGIC = b"PIQT"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<4sII")
_COUNTS = struct.Struct("<QI")


@dataclass
class CheckpointData:
    layout: ParameterLayout
    vectors: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)


def write_checkpoint(path: str | Path, data: CheckpointData) -> Path:
    """
    Write vectors + metadata; the file appears atomically (write to .tmp, then rename)

    Raises:
        ConfigurationError when a vector does not match the layout
    """
    path = Path(path)
    names = list(data.vectors)
    for name in names:
        if data.vectors[name].shape != (data.layout.size,):
            raise ConfigurationError(f"vector {name} does not match the layout size {data.layout.size}")
    header = json.dumps(
        {"layout": data.layout.to_json(), "vectors": names, "metadata": data.metadata},
        sort_keys=True,
    ).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header)))
        f.write(header)
        f.write(_COUNTS.pack(data.layout.size, len(names)))
        for name in names:
            f.write(np.ascontiguousarray(data.vectors[name], dtype="<f8").tobytes())
    os.replace(tmp, path)
    logger.info(f"Checkpoint written: {path} ({len(names)} x {data.layout.size} parameters)")
    return path


def read_checkpoint(path: str | Path) -> CheckpointData:
    """
    Read a checkpoint in full before building anything from it

    Raises:
        RestoreError on missing file, bad magic, unknown version, bad header or wrong length
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise RestoreError(f"cannot read checkpoint {path}: {e}") from e

    if len(raw) < _PREAMBLE.size:
        raise RestoreError(f"{path}: file too short for a checkpoint header")
    magic, version, header_len = _PREAMBLE.unpack_from(raw, 0)
    if magic != MAGIC:
        raise RestoreError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise RestoreError(f"{path}: unsupported format version {version}")

    offset = _PREAMBLE.size
    if len(raw) < offset + header_len + _COUNTS.size:
        raise RestoreError(f"{path}: truncated header")
    try:
        header = json.loads(raw[offset:offset + header_len].decode("utf-8"))
        layout = ParameterLayout.from_json(header["layout"])
        names = list(header["vectors"])
    except (ValueError, KeyError, TypeError, ConfigurationError) as e:
        raise RestoreError(f"{path}: corrupt header: {e}") from e
    offset += header_len

    n_params, n_vectors = _COUNTS.unpack_from(raw, offset)
    offset += _COUNTS.size
    if n_params != layout.size or n_vectors != len(names):
        raise RestoreError(f"{path}: counts ({n_params}, {n_vectors}) disagree with the header")
    expected = offset + 8 * n_params * n_vectors
    if len(raw) != expected:
        raise RestoreError(f"{path}: expected {expected} bytes, found {len(raw)}")

    block = np.frombuffer(raw, dtype="<f8", offset=offset).astype(np.float64).reshape(n_vectors, n_params)
    vectors = {name: block[i].copy() for i, name in enumerate(names)}
    return CheckpointData(layout=layout, vectors=vectors, metadata=header.get("metadata", {}))
