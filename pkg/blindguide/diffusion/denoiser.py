"""
Noise-prediction interface and a finite-difference fallback for its vjp
"""

from abc import ABC, abstractmethod
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from ..exceptions import ParameterError
from ..ops.image import Image, check_same_shape

PixelIndex = Union[int, Sequence[int]]


class Denoiser(ABC):
    """eps_theta(x_t, t) together with its transpose-Jacobian product"""

    @abstractmethod
    def eps(self, x_t: Image, t: int) -> Image:
        """
        Predict the noise in x_t

        Returns:
            Image of the same shape as x_t
        """

    @abstractmethod
    def vjp(self, x_t: Image, t: int, cotangent: Image) -> Image:
        """Apply the transpose Jacobian of eps at x_t to cotangent"""


def finite_diff_vjp(denoiser, x_t: Image, t: int, cotangent: Image, step: float,
                    pixels: Iterable[PixelIndex]) -> Image:
    """
    Gradient of s(x) = <eps(x, t), cotangent> by central differences

    Only the listed pixels are probed (flat indices or (i, j, c) tuples); every
    other entry of the result is zero.
    """
    if step <= 0:
        raise ParameterError("step", f"must be positive, got {step}")
    check_same_shape(x_t, cotangent, "x_t and cotangent")
    x = np.array(x_t, dtype=np.float64)
    flat = _flat_indices(pixels, x.shape)
    if flat.size == 0:
        raise ParameterError("pixels", "pixel subset is empty")

    grad = np.zeros_like(x)
    if not np.any(cotangent):
        return grad
    work = x.reshape(-1)
    out = grad.reshape(-1)
    for index in flat:
        original = work[index]
        work[index] = original + step
        plus = float(np.sum(denoiser.eps(x, t) * cotangent))
        work[index] = original - step
        minus = float(np.sum(denoiser.eps(x, t) * cotangent))
        work[index] = original
        out[index] = (plus - minus) / (2.0 * step)
    return grad


def _flat_indices(pixels: Iterable[PixelIndex], shape) -> np.ndarray:
    """Normalise a pixel subset to unique flat indices"""
    flat = []
    for p in pixels:
        if np.ndim(p) == 0:
            flat.append(int(p))
        else:
            flat.append(int(np.ravel_multi_index(tuple(int(v) for v in p), shape)))
    size = int(np.prod(shape))
    for index in flat:
        if not 0 <= index < size:
            raise ParameterError("pixels", f"index {index} outside an image of {size} entries")
    return np.unique(np.asarray(flat, dtype=np.int64))


class FiniteDifferenceDenoiser(Denoiser):
    """Wrap an eps function that has no analytic Jacobian"""

    def __init__(self, eps_fn: Callable[[Image, int], Image], step: float = 1e-5,
                 pixels: Optional[Sequence[PixelIndex]] = None):
        if step <= 0:
            raise ParameterError("step", f"must be positive, got {step}")
        self._eps_fn = eps_fn
        self.step = step
        self.pixels = pixels

    def eps(self, x_t: Image, t: int) -> Image:
        return self._eps_fn(x_t, t)

    def vjp(self, x_t: Image, t: int, cotangent: Image) -> Image:
        pixels = self.pixels if self.pixels is not None else range(int(np.size(x_t)))
        return finite_diff_vjp(self, x_t, t, cotangent, self.step, pixels)
