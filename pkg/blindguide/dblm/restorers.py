"""
Restoration models: the RM that DBLM maps through

The default is Wiener deconvolution against the Gaussian transfer function of
the estimated std. It runs on the mirror extension of the image, where the
reflect-boundary blur is exactly a circular convolution.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np
from scipy.fft import fft, fft2, ifft2

from ..exceptions import ParameterError
from ..ops.gaussian import GaussianKernel, make_kernel
from ..ops.image import Image, as_image


class BaseRestorer(ABC):
    """Abstract base class for restoration models"""

    @abstractmethod
    def restore(self, y: Image) -> Image:
        """
        Restore a degraded image

        Returns:
            Image with the shape of y
        """

    def __call__(self, y: Image) -> Image:
        return self.restore(y)


class IdentityRestorer(BaseRestorer):
    """Treats the input as already restored"""

    def restore(self, y: Image) -> Image:
        return as_image(y).copy()


class WienerRestorer(BaseRestorer):
    """Wiener deconvolution of a reflect-boundary Gaussian blur"""

    def __init__(self, assumed_std: float, noise_power: float = 1e-3):
        if noise_power < 0:
            raise ParameterError("noise_power", f"must be non-negative, got {noise_power}")
        self.kernel = make_kernel(assumed_std)
        self.noise_power = float(noise_power)

    def restore(self, y: Image) -> Image:
        return wiener_restore(y, self.kernel.std, self.noise_power)


def mirror_extend(img: Image) -> np.ndarray:
    """(2H, 2W, C) even-symmetric extension whose periodisation matches reflect padding"""
    top = np.concatenate([img, img[:, ::-1]], axis=1)
    return np.concatenate([top, top[::-1]], axis=0)


def circular_transfer(k: GaussianKernel, n: int) -> np.ndarray:
    """Frequency response of the taps wrapped onto a length-n circle (real for symmetric taps)"""
    line = np.zeros(n)
    np.add.at(line, np.arange(-k.radius, k.radius + 1) % n, k.taps)
    return np.real(fft(line))


def transfer_2d(k: GaussianKernel, shape) -> np.ndarray:
    rows, cols = shape
    return circular_transfer(k, rows)[:, None] * circular_transfer(k, cols)[None, :]


def wiener_restore(y: Image, assumed_std: float, noise_power: float) -> Image:
    """
    Frequency-domain Wiener deconvolution

    X = conj(H) Y / (|H|^2 + noise_power) on every bin except DC, which is kept,
    so heavy regularisation tends to the image mean. A delta kernel is the identity.

    Args:
        y: Blurred image
        assumed_std: Std of the Gaussian to invert
        noise_power: Regulariser, >= 0

    Returns:
        Restored image with the shape of y
    """
    if noise_power < 0:
        raise ParameterError("noise_power", f"must be non-negative, got {noise_power}")
    y = as_image(y)
    k = make_kernel(assumed_std)
    if k.is_delta:
        return y.copy()
    h, w, _ = y.shape
    extended = mirror_extend(y)
    transfer = transfer_2d(k, extended.shape[:2])
    denominator = transfer ** 2 + noise_power
    gain = np.divide(transfer, denominator, out=np.zeros_like(transfer), where=denominator > 0)
    gain[0, 0] = 1.0
    spectrum = fft2(extended, axes=(0, 1))
    restored = np.real(ifft2(spectrum * gain[:, :, None], axes=(0, 1)))
    return restored[:h, :w]


class RestorerFactory:
    """Factory for creating restorer instances"""

    def create_restorer(self, config: Dict[str, Any]) -> BaseRestorer:
        """
        Create a restorer from its configuration

        Raises:
            ValueError: If the restorer type is not supported
        """
        restorer_type = config.get("type")

        if restorer_type == "identity":
            return IdentityRestorer()
        elif restorer_type == "wiener":
            return WienerRestorer(config.get("assumed_std", 0.0), config.get("noise_power", 1e-3))
        else:
            raise ValueError(f"Unsupported restorer type: {restorer_type}")
