"""
Separable Gaussian kernels and reflect-boundary convolution

Boundary handling is symmetric reflection (d c b a | a b c d | d c b a), so a
constant image is a fixed point of every normalised kernel. Filtering is a
correlation with the taps; for the symmetric Gaussian profile that is the same
as convolution. `convolve_adjoint` is the exact transpose of `convolve`,
including the border terms folded back by the reflection.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ParameterError
from .image import Image, as_image

DELTA_THRESHOLD = 0.05
DELTA_TAPS = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    """Isotropic Gaussian as a 1-D separable profile"""
    std: float
    radius: int
    taps: np.ndarray

    @property
    def is_delta(self) -> bool:
        return self.std < DELTA_THRESHOLD

    @property
    def size(self) -> int:
        return 2 * self.radius + 1

    def matrix(self) -> np.ndarray:
        """Full 2-D kernel (outer product of the taps)"""
        return np.outer(self.taps, self.taps)


def kernel_radius(std: float) -> int:
    return max(1, int(math.ceil(3.0 * std)))


def gaussian_taps(std: float, radius: int) -> np.ndarray:
    """Normalised Gaussian profile on [-radius, radius] with a caller-fixed radius"""
    if std <= 0:
        raise ParameterError("std", f"must be positive, got {std}")
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-offsets ** 2 / (2.0 * std ** 2))
    return weights / weights.sum()


def make_kernel(std: float) -> GaussianKernel:
    """
    Gaussian kernel for a continuous std

    Below the delta threshold the discrete delta [0, 1, 0] is returned.

    Raises:
        ParameterError: If std is negative or not finite
    """
    std = float(std)
    if not math.isfinite(std) or std < 0:
        raise ParameterError("std", f"must be a finite non-negative number, got {std}")
    if std < DELTA_THRESHOLD:
        return GaussianKernel(std=std, radius=1, taps=DELTA_TAPS.copy())
    radius = kernel_radius(std)
    return GaussianKernel(std=std, radius=radius, taps=gaussian_taps(std, radius))


def kernel_std_derivative(std: float, radius: Optional[int] = None) -> np.ndarray:
    """
    d taps / d std of the normalised profile

    With e_i = exp(-i^2 / 2 std^2) and Z = sum e, taps = e / Z and
    d taps = (de Z - e sum(de)) / Z^2 with de_i = e_i i^2 / std^3; the entries sum to zero.

    Raises:
        ParameterError: If std is on the delta branch
    """
    std = float(std)
    if not std >= DELTA_THRESHOLD:
        raise ParameterError("std", f"derivative undefined below {DELTA_THRESHOLD}, got {std}")
    radius = kernel_radius(std) if radius is None else int(radius)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    e = np.exp(-offsets ** 2 / (2.0 * std ** 2))
    de = e * offsets ** 2 / std ** 3
    z = e.sum()
    return (de * z - e * de.sum()) / z ** 2


@lru_cache(maxsize=256)
def _reflect_index(n: int, radius: int) -> np.ndarray:
    """Source index of every position of the padded axis"""
    index = np.pad(np.arange(n), radius, mode="symmetric")
    index.setflags(write=False)
    return index


def _filter_axis(img: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    radius = (len(taps) - 1) // 2
    padded = np.take(img, _reflect_index(img.shape[axis], radius), axis=axis)
    windows = sliding_window_view(padded, len(taps), axis=axis)
    return np.tensordot(windows, taps, axes=([-1], [0]))


def _filter_axis_adjoint(img: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    radius = (len(taps) - 1) // 2
    n = img.shape[axis]
    moved = np.moveaxis(img, axis, 0)
    spread = np.zeros((n + 2 * radius,) + moved.shape[1:])
    for j, w in enumerate(taps):
        spread[j:j + n] += w * moved
    out = np.zeros_like(moved)
    np.add.at(out, _reflect_index(n, radius), spread)
    return np.moveaxis(out, 0, axis)


def filter_separable(img: Image, taps_h: np.ndarray, taps_v: np.ndarray) -> Image:
    """Horizontal pass with taps_h, then vertical pass with taps_v"""
    out = _filter_axis(as_image(img), np.asarray(taps_h, dtype=np.float64), axis=1)
    return _filter_axis(out, np.asarray(taps_v, dtype=np.float64), axis=0)


def filter_separable_adjoint(img: Image, taps_h: np.ndarray, taps_v: np.ndarray) -> Image:
    """Transpose of filter_separable"""
    out = _filter_axis_adjoint(as_image(img), np.asarray(taps_v, dtype=np.float64), axis=0)
    return _filter_axis_adjoint(out, np.asarray(taps_h, dtype=np.float64), axis=1)


def convolve(img: Image, k: GaussianKernel) -> Image:
    """Separable reflect-boundary convolution; shape preserving"""
    if k.is_delta:
        return as_image(img).copy()
    return filter_separable(img, k.taps, k.taps)


def convolve_adjoint(img: Image, k: GaussianKernel) -> Image:
    """Exact transpose of convolve"""
    if k.is_delta:
        return as_image(img).copy()
    return filter_separable_adjoint(img, k.taps, k.taps)


def blur(img: Image, std: float) -> Image:
    return convolve(img, make_kernel(std))
