"""
Directory-backed image stores (8-bit PNG and raw tensors)
"""

import io
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image as PILImage

from ..logging.logger import Logger
from ..ops.image import as_image, export_image
from ..utils.helpers import atomic_write
from .base import BaseImageStore
from .tensors import read_tensor, write_tensor


def read_png(path: Union[str, Path], channels: Optional[int] = None) -> np.ndarray:
    """Load an 8-bit PNG (or any PIL-readable file) as a unit-range (H, W, C) array"""
    with PILImage.open(path) as pil:
        if channels == 1 or (channels is None and pil.mode in ("L", "I", "I;16", "1", "P") and _is_gray(pil)):
            pil = pil.convert("L")
        else:
            pil = pil.convert("RGB")
        data = np.asarray(pil, dtype=np.float64) / 255.0
    return as_image(data)


def _is_gray(pil) -> bool:
    if pil.mode != "P":
        return True
    rgb = np.asarray(pil.convert("RGB"))
    return bool(np.all(rgb[..., 0] == rgb[..., 1]) and np.all(rgb[..., 1] == rgb[..., 2]))


def encode_png(image: np.ndarray) -> bytes:
    """Clamp, quantise to 8 bits and encode"""
    img = as_image(image)
    data = np.round(export_image(img) * 255.0).astype(np.uint8)
    if data.shape[2] == 1:
        pil = PILImage.fromarray(data[:, :, 0], mode="L")
    elif data.shape[2] == 3:
        pil = PILImage.fromarray(data, mode="RGB")
    else:
        raise ValueError(f"PNG export supports 1 or 3 channels, got {data.shape[2]}")
    buffer = io.BytesIO()
    pil.save(buffer, format="PNG")
    return buffer.getvalue()


def write_png(path: Union[str, Path], image: np.ndarray) -> Path:
    path = Path(path)
    with atomic_write(path, "wb") as handle:
        handle.write(encode_png(image))
    return path


def load_image(path: Union[str, Path]) -> np.ndarray:
    """Read a PNG or raw tensor file by suffix"""
    path = Path(path)
    if path.suffix.lower() == ".bgt":
        return read_tensor(path)
    return read_png(path)


def save_image(path: Union[str, Path], image: np.ndarray) -> Path:
    """Write a PNG or raw tensor file by suffix; PNGs are clamped to [0, 1]"""
    path = Path(path)
    if path.suffix.lower() == ".bgt":
        return write_tensor(path, image)
    return write_png(path, image)


def center_crop_resize(image: np.ndarray, size: int) -> np.ndarray:
    """Square center crop followed by a bicubic resize to size x size"""
    img = as_image(image)
    h, w, _ = img.shape
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    crop = img[top:top + side, left:left + side]
    if side == size:
        return crop.copy()
    channels = []
    for c in range(crop.shape[2]):
        pil = PILImage.fromarray(crop[:, :, c].astype(np.float32), mode="F")
        channels.append(np.asarray(pil.resize((size, size), PILImage.BICUBIC), dtype=np.float64))
    return np.clip(np.stack(channels, axis=2), 0.0, 1.0)


class PngImageStore(BaseImageStore):
    """Directory of 8-bit PNG images"""

    suffix = ".png"

    def __init__(self, path: Union[str, Path], logger: Optional[Logger] = None, channels: Optional[int] = None):
        super().__init__(path, logger)
        self.channels = channels

    def read_image(self, name: str) -> np.ndarray:
        path = self.path_for(name)
        if not path.exists():
            raise FileNotFoundError(f"Image not found: {path}")
        return read_png(path, self.channels)

    def write_image(self, name: str, image: np.ndarray) -> Path:
        path = write_png(self.path_for(name), image)
        self.logger.debug(f"Wrote image: {path}")
        return path


class RawTensorStore(BaseImageStore):
    """Directory of BGT1 raw tensors (lossless, unclamped)"""

    suffix = ".bgt"

    def read_image(self, name: str) -> np.ndarray:
        return read_tensor(self.path_for(name))

    def write_image(self, name: str, image: np.ndarray) -> Path:
        path = write_tensor(self.path_for(name), image)
        self.logger.debug(f"Wrote tensor: {path}")
        return path
