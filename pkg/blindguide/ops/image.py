"""
Image conventions

An Image is a float64 numpy array of shape (H, W, C). Public entry points take
and return unit-range images; the diffusion machinery works in the model
domain [-1, 1]. Nothing clamps internally; `export_image` clamps at the boundary.
"""

import numpy as np

from ..exceptions import DimensionError

Image = np.ndarray


def as_image(data, name: str = "image") -> Image:
    """Coerce 2-D or 3-D array-likes to a float64 (H, W, C) array"""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise DimensionError(f"{name} must have shape (H, W, C) with positive sizes, got {arr.shape}")
    return arr


def check_same_shape(a: Image, b: Image, what: str = "images"):
    """Raise DimensionError unless the shapes agree"""
    if np.shape(a) != np.shape(b):
        raise DimensionError(f"{what} differ in shape: {np.shape(a)} vs {np.shape(b)}")


def to_model(img: Image) -> Image:
    """Unit range -> diffusion model range [-1, 1]"""
    return 2.0 * np.asarray(img, dtype=np.float64) - 1.0


def from_model(x: Image) -> Image:
    """Diffusion model range -> unit range"""
    return (np.asarray(x, dtype=np.float64) + 1.0) / 2.0


def export_image(img: Image) -> Image:
    """Clamp to [0, 1]; the only place clamping happens"""
    return np.clip(img, 0.0, 1.0)


def constant_image(value: float, height: int, width: int, channels: int = 1) -> Image:
    return np.full((height, width, channels), float(value))
