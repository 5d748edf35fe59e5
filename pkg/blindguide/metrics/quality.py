"""
Image quality metrics on unit-range images
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.ndimage import uniform_filter

from ..exceptions import DimensionError, ParameterError
from ..ops.gaussian import blur
from ..ops.image import Image, as_image, check_same_shape

SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: Image, b: Image, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; math.inf for identical images"""
    check_same_shape(a, b, "psnr inputs")
    mse = float(np.mean((as_image(a) - as_image(b)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range ** 2 / mse)


def _ssim_channel(x: np.ndarray, y: np.ndarray, window: int, data_range: float) -> float:
    n = window * window
    cov_norm = n / (n - 1.0)
    ux = uniform_filter(x, size=window)
    uy = uniform_filter(y, size=window)
    uxx = uniform_filter(x * x, size=window)
    uyy = uniform_filter(y * y, size=window)
    uxy = uniform_filter(x * y, size=window)
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux ** 2 + uy ** 2 + c1) * (vx + vy + c2))
    pad = (window - 1) // 2
    return float(s[pad:s.shape[0] - pad, pad:s.shape[1] - pad].mean())


def ssim(a: Image, b: Image, window: int = 7, data_range: float = 1.0) -> float:
    """
    Mean structural similarity with a uniform window

    Sample covariances over the window, border pixels within half a window
    excluded, averaged over channels.

    Raises:
        DimensionError: If shapes differ or the image is smaller than the window
        ParameterError: If window is even or below 3
    """
    check_same_shape(a, b, "ssim inputs")
    if window < 3 or window % 2 == 0:
        raise ParameterError("window", f"must be odd and >= 3, got {window}")
    a, b = as_image(a), as_image(b)
    if min(a.shape[0], a.shape[1]) < window:
        raise DimensionError(f"image {a.shape[:2]} is smaller than the {window}x{window} window")
    return float(np.mean([_ssim_channel(a[:, :, c], b[:, :, c], window, data_range)
                          for c in range(a.shape[2])]))


def consistency(y_acute: Image, out: Image, std: float) -> float:
    """Per-pixel mean of (y_acute - k_std * out)^2"""
    check_same_shape(y_acute, out, "measurement and output")
    return float(np.mean((as_image(y_acute) - blur(out, std)) ** 2))


def sharpness(img: Image) -> float:
    """Mean gradient magnitude (central differences)"""
    img = as_image(img)
    gy, gx = np.gradient(img, axis=(0, 1))
    return float(np.mean(np.hypot(gx, gy)))


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    sharpness: float
    consistency: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def evaluate_pair(reference: Image, image: Image, y_acute: Optional[Image] = None,
                  std: Optional[float] = None) -> MetricReport:
    """Metrics of `image` against a clean reference; consistency when a measurement and its std are given"""
    score = None
    if y_acute is not None and std is not None:
        score = consistency(y_acute, image, std)
    return MetricReport(psnr=psnr(reference, image), ssim=ssim(reference, image),
                        sharpness=sharpness(image), consistency=score)
