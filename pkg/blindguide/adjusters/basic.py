"""
Baseline scale adjusters: a uniform scale and a local-variance heuristic
"""

import numpy as np
from scipy.ndimage import uniform_filter

from ..exceptions import ParameterError
from ..guidance.guidance_set import ScaleMap
from ..ops.image import Image, as_image
from .base import BaseScaleAdjuster


class ConstantAdjuster(BaseScaleAdjuster):
    """The same scale at every pixel"""

    def __init__(self, scale: float):
        if not 0.0 <= scale <= 1.0:
            raise ParameterError("scale", f"must lie in [0, 1], got {scale}")
        self.scale = float(scale)

    def adjust(self, y_acute: Image, x_t0: Image, t: int) -> ScaleMap:
        return np.full(np.shape(x_t0), self.scale)

    def describe(self) -> str:
        return f"constant({self.scale:g})"


def local_variance(img: Image, window: int) -> np.ndarray:
    """Per-pixel variance over a window x window neighbourhood (reflect boundary)"""
    img = as_image(img)
    size = (window, window, 1)
    mean = uniform_filter(img, size=size, mode="reflect")
    mean_sq = uniform_filter(img ** 2, size=size, mode="reflect")
    return np.maximum(mean_sq - mean ** 2, 0.0)


class VarianceAdjuster(BaseScaleAdjuster):
    """A = 1 / (1 + localvar(x_t0) / pivot): textured regions get less guidance"""

    def __init__(self, window: int = 5, pivot: float = 0.01):
        if window < 3 or window % 2 == 0:
            raise ParameterError("window", f"must be odd and >= 3, got {window}")
        if pivot <= 0:
            raise ParameterError("pivot", f"must be positive, got {pivot}")
        self.window = int(window)
        self.pivot = float(pivot)

    def adjust(self, y_acute: Image, x_t0: Image, t: int) -> ScaleMap:
        return 1.0 / (1.0 + local_variance(x_t0, self.window) / self.pivot)

    def describe(self) -> str:
        return f"variance(window={self.window}, pivot={self.pivot:g})"
