"""
Degradation stages: Gaussian blur, bilinear resize, additive noise and a
block-DCT compression proxy
"""

from typing import Tuple

import numpy as np
from scipy.fft import dctn, idctn
from scipy.ndimage import map_coordinates

from ..ops.gaussian import blur
from .base import BaseDegradation

BLOCK = 8


class BlurDegradation(BaseDegradation):
    """Reflect-boundary Gaussian blur with config["std"]"""

    def apply(self, image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return blur(image, float(self.config.get("std", 0.0)))


class ResizeDegradation(BaseDegradation):
    """
    Bilinear resampling

    Target size is config["size"] = (H, W), or the input size divided by
    config["factor"], rounded and at least one pixel.
    """

    def target_size(self, shape: Tuple[int, ...]) -> Tuple[int, int]:
        if "size" in self.config:
            h, w = self.config["size"]
            return int(h), int(w)
        factor = float(self.config.get("factor", 1.0))
        return max(1, int(round(shape[0] / factor))), max(1, int(round(shape[1] / factor)))

    def apply(self, image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out_h, out_w = self.target_size(image.shape)
        return bilinear_resize(image, out_h, out_w)


class NoiseDegradation(BaseDegradation):
    """Additive i.i.d. Gaussian noise of std config["zeta"] / 255"""

    def apply(self, image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        zeta = float(self.config.get("zeta", 0.0))
        if zeta == 0.0:
            return image
        return image + (zeta / 255.0) * rng.standard_normal(image.shape)


class CompressionDegradation(BaseDegradation):
    """
    8x8 block DCT with uniform quantisation

    The step is config["step"] * (100 - config["quality"]); quality 100 is lossless.
    """

    def apply(self, image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        quality = float(self.config.get("quality", 100))
        step = float(self.config.get("step", 0.002)) * (100.0 - quality)
        if step <= 0.0:
            return image
        return block_dct_quantize(image, step)


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-centred bilinear resampling of an (H, W, C) array"""
    in_h, in_w, channels = image.shape
    if (in_h, in_w) == (out_h, out_w):
        return image.copy()
    rows = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1)
    cols = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1)
    grid_r, grid_c = np.meshgrid(rows, cols, indexing="ij")
    out = np.empty((out_h, out_w, channels))
    for c in range(channels):
        out[:, :, c] = map_coordinates(image[:, :, c], [grid_r, grid_c], order=1, mode="nearest")
    return out


def block_dct_quantize(image: np.ndarray, step: float) -> np.ndarray:
    """Quantise every 8x8 block's orthonormal DCT coefficients to multiples of step"""
    h, w, channels = image.shape
    pad_h, pad_w = (-h) % BLOCK, (-w) % BLOCK
    padded = np.pad(image, ((0, pad_h), (0, pad_w), (0, 0)), mode="symmetric")
    ph, pw = padded.shape[:2]
    blocks = padded.reshape(ph // BLOCK, BLOCK, pw // BLOCK, BLOCK, channels)
    coeffs = dctn(blocks, axes=(1, 3), norm="ortho")
    quantized = np.round(coeffs / step) * step
    restored = idctn(quantized, axes=(1, 3), norm="ortho").reshape(ph, pw, channels)
    return restored[:h, :w]
