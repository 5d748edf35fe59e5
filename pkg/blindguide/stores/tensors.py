"""
Raw tensor sidecar format

File layout: magic "BGT1", three little-endian uint32 (H, W, C), then H*W*C
little-endian float32 values in row-major order.
"""

import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigurationError, DimensionError
from ..utils.helpers import atomic_write

MAGIC = b"BGT1"
HEADER = struct.Struct("<4sIII")
WEIGHTS_MANIFEST = "layers.tsv"


def encode_tensor(data: np.ndarray) -> bytes:
    """Serialise a 2-D or 3-D array"""
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionError(f"raw tensors must be 2-D or 3-D, got shape {arr.shape}")
    h, w, c = arr.shape
    body = np.ascontiguousarray(arr, dtype="<f4").tobytes(order="C")
    return HEADER.pack(MAGIC, h, w, c) + body


def decode_tensor(payload: bytes) -> np.ndarray:
    """Parse bytes produced by encode_tensor into a float64 (H, W, C) array"""
    if len(payload) < HEADER.size:
        raise ConfigurationError("raw tensor is truncated (no header)")
    magic, h, w, c = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise ConfigurationError(f"bad raw tensor magic {magic!r}")
    expected = HEADER.size + 4 * h * w * c
    if len(payload) != expected:
        raise ConfigurationError(f"raw tensor size mismatch: expected {expected} bytes, got {len(payload)}")
    values = np.frombuffer(payload, dtype="<f4", offset=HEADER.size, count=h * w * c)
    return values.reshape(h, w, c).astype(np.float64)


def write_tensor(path: Union[str, Path], data: np.ndarray) -> Path:
    path = Path(path)
    with atomic_write(path, "wb") as handle:
        handle.write(encode_tensor(data))
    return path


def read_tensor(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"raw tensor not found: {path}")
    return decode_tensor(path.read_bytes())


def save_weights(directory: Union[str, Path], arrays: Dict[str, np.ndarray]) -> Path:
    """
    Persist named parameter arrays, one raw tensor per layer

    The manifest lists `name<TAB>shape<TAB>file` so arbitrary shapes survive
    the three-axis file format.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for index, (name, value) in enumerate(arrays.items()):
        value = np.asarray(value, dtype=np.float64)
        file_name = f"layer_{index:03d}.bgt"
        write_tensor(directory / file_name, value.reshape(-1, 1, 1) if value.size else np.zeros((0, 1, 1)))
        shape = ",".join(str(s) for s in value.shape)
        rows.append((name, shape, file_name))
    manifest = pd.DataFrame(rows, columns=["name", "shape", "file"])
    with atomic_write(directory / WEIGHTS_MANIFEST, "w") as handle:
        manifest.to_csv(handle, sep="\t", index=False)
    return directory


def load_weights(directory: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Inverse of save_weights"""
    directory = Path(directory)
    manifest_path = directory / WEIGHTS_MANIFEST
    if not manifest_path.exists():
        raise ConfigurationError(f"weights manifest not found: {manifest_path}")
    manifest = pd.read_csv(manifest_path, sep="\t", dtype={"shape": str}, keep_default_na=False)
    arrays: Dict[str, np.ndarray] = {}
    for row in manifest.itertuples(index=False):
        shape = tuple(int(s) for s in str(row.shape).split(",") if s != "")
        arrays[row.name] = read_tensor(directory / row.file).reshape(shape)
    return arrays
