"""
Radial power spectra and the spectral blur-level estimator

The estimator compares an image's radially averaged log power with a clean
corpus reference. Their difference is the log attenuation of the unknown blur;
the grid std whose Gaussian attenuation matches it best (both sides clipped
at the noise floor) is the estimate.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.fft import fft2

from ..exceptions import ConfigurationError, EstimationError
from ..logging.logger import get_logger
from ..ops.gaussian import convolve, make_kernel
from ..ops.image import Image, as_image
from ..ops.std_search import StdGrid, grid_values
from ..utils.helpers import atomic_write
from .restorers import circular_transfer, mirror_extend, wiener_restore

logger = get_logger(__name__)

NYQUIST = 0.5


def _radial_bins(shape: Tuple[int, int], n_bins: int) -> np.ndarray:
    """Bin index per frequency sample; 0 is DC, bins beyond n_bins are dropped"""
    fy = np.fft.fftfreq(shape[0])
    fx = np.fft.fftfreq(shape[1])
    radius = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    return np.rint(radius / (NYQUIST / n_bins)).astype(np.int64)


def _bin_mean(values: np.ndarray, bins: np.ndarray, n_bins: int) -> np.ndarray:
    """Mean of values per bin 1..n_bins; NaN for empty bins"""
    keep = (bins >= 1) & (bins <= n_bins)
    sums = np.bincount(bins[keep], weights=values[keep], minlength=n_bins + 1)[1:]
    counts = np.bincount(bins[keep], minlength=n_bins + 1)[1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def radial_power(img: Image, n_bins: int) -> np.ndarray:
    """Radially averaged power per bin (mirror extension, mean over channels)"""
    extended = mirror_extend(as_image(img))
    spectrum = fft2(extended, axes=(0, 1))
    power = np.mean(np.abs(spectrum) ** 2, axis=2) / (extended.shape[0] * extended.shape[1])
    return _bin_mean(power.ravel(), _radial_bins(power.shape, n_bins).ravel(), n_bins)


def default_bins(shape) -> int:
    return max(2, min(shape[0], shape[1]))


@dataclass(frozen=True, eq=False)
class RadialSpectrum:
    """Log power per radial frequency bin (cycles per pixel)"""
    frequencies: np.ndarray
    log_power: np.ndarray

    @property
    def n_bins(self) -> int:
        return int(self.frequencies.size)

    @classmethod
    def from_image(cls, img: Image, n_bins: Optional[int] = None) -> "RadialSpectrum":
        img = as_image(img)
        n_bins = n_bins or default_bins(img.shape)
        power = radial_power(img, n_bins)
        with np.errstate(divide="ignore"):
            log_power = np.log(power)
        return cls(np.arange(1, n_bins + 1) * (NYQUIST / n_bins), log_power)

    @classmethod
    def from_corpus(cls, corpus: np.ndarray, n_bins: Optional[int] = None) -> "RadialSpectrum":
        """Mean log power over a clean unit-range corpus of shape (N, H, W, C)"""
        corpus = np.asarray(corpus, dtype=np.float64)
        if corpus.ndim != 4 or corpus.shape[0] == 0:
            raise ConfigurationError(f"corpus must have shape (N, H, W, C) with N >= 1, got {corpus.shape}")
        n_bins = n_bins or default_bins(corpus.shape[1:3])
        logs = np.stack([cls.from_image(img, n_bins).log_power for img in corpus])
        logs[~np.isfinite(logs)] = np.nan
        with np.errstate(invalid="ignore"):
            mean = np.nanmean(logs, axis=0)
        return cls(np.arange(1, n_bins + 1) * (NYQUIST / n_bins), mean)

    def interpolate(self, frequencies: np.ndarray) -> np.ndarray:
        valid = np.isfinite(self.log_power)
        return np.interp(frequencies, self.frequencies[valid], self.log_power[valid])

    def to_table(self) -> pd.DataFrame:
        return pd.DataFrame({"frequency_bin": self.frequencies, "log_power": self.log_power})

    def save(self, path: Union[str, Path]) -> Path:
        """Write the `frequency_bin<TAB>log_power` table"""
        path = Path(path)
        with atomic_write(path, "w") as handle:
            self.to_table().to_csv(handle, sep="\t", index=False, float_format="%.10g")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RadialSpectrum":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"reference spectrum not found: {path}")
        table = pd.read_csv(path, sep="\t")
        missing = {"frequency_bin", "log_power"} - set(table.columns)
        if missing:
            raise ConfigurationError(f"reference spectrum {path} lacks columns {sorted(missing)}")
        return cls(table["frequency_bin"].to_numpy(np.float64), table["log_power"].to_numpy(np.float64))


@dataclass(frozen=True, eq=False)
class StdEstimate:
    """Estimated std* and the estimator's blurred intermediate"""
    std_hat: float
    intermediate: Image
    costs: Optional[np.ndarray] = None


class BaseStdEstimator(ABC):
    """Abstract base class for blur-level estimators"""

    @abstractmethod
    def estimate(self, y: Image) -> StdEstimate:
        """
        Estimate the Gaussian std that y is blurred with

        Returns:
            StdEstimate with std_hat on the estimator grid
        """


class SpectralStdEstimator(BaseStdEstimator):
    """Brute-force fit of a Gaussian attenuation to the observed radial spectrum"""

    def __init__(self, reference: RadialSpectrum, grid: Optional[StdGrid] = None,
                 noise_floor: float = 1e-3, noise_power: float = 1e-3):
        if noise_floor <= 0:
            raise ConfigurationError(f"noise_floor must be positive, got {noise_floor}")
        self.reference = reference
        self.grid = grid or StdGrid()
        self.stds = grid_values(self.grid)
        self.log_floor = float(np.log(noise_floor))
        self.noise_power = noise_power
        self._attenuation: Dict[Tuple[int, int], np.ndarray] = {}

    def attenuation_table(self, shape: Tuple[int, int]) -> np.ndarray:
        """Clipped log attenuation per (grid std, bin) for images of this size"""
        if shape not in self._attenuation:
            ext = (2 * shape[0], 2 * shape[1])
            bins = _radial_bins(ext, self.reference.n_bins).ravel()
            rows = []
            for std in self.stds:
                k = make_kernel(std)
                gain = circular_transfer(k, ext[0])[:, None] * circular_transfer(k, ext[1])[None, :]
                mean_gain = _bin_mean((gain ** 2).ravel(), bins, self.reference.n_bins)
                with np.errstate(divide="ignore"):
                    rows.append(np.maximum(np.log(mean_gain), self.log_floor))
            self._attenuation[shape] = np.stack(rows)
        return self._attenuation[shape]

    def fit(self, y: Image) -> Tuple[float, np.ndarray]:
        """
        Best grid std for y

        Returns:
            (std_hat, cost per grid std)

        Raises:
            EstimationError: If y has no power away from DC
        """
        y = as_image(y)
        observed = radial_power(y, self.reference.n_bins)
        finite = np.isfinite(observed)
        if not np.any(observed[finite] > 1e-20):
            raise EstimationError("degenerate_spectrum", "image has no power away from DC (constant image)")
        with np.errstate(divide="ignore"):
            attenuation = np.maximum(np.log(observed) - self.reference.log_power, self.log_floor)
        table = self.attenuation_table(y.shape[:2])
        mask = np.isfinite(attenuation) & np.all(np.isfinite(table), axis=0)
        if not np.any(mask):
            raise EstimationError("no_overlap", "image and reference spectra share no frequency bins")
        costs = np.mean((table[:, mask] - attenuation[mask]) ** 2, axis=1)
        best = int(np.flatnonzero(costs <= costs.min() + 1e-12)[0])
        return float(self.stds[best]), costs

    def estimate(self, y: Image) -> StdEstimate:
        y = as_image(y)
        std_hat, costs = self.fit(y)
        intermediate = convolve(wiener_restore(y, std_hat, self.noise_power), make_kernel(std_hat))
        logger.debug(f"Spectral std estimate: {std_hat:.2f}")
        return StdEstimate(std_hat=std_hat, intermediate=intermediate, costs=costs)


def estimate_std(y: Image, reference_spectrum: RadialSpectrum, grid: Optional[StdGrid] = None,
                 noise_floor: float = 1e-3, noise_power: float = 1e-3) -> StdEstimate:
    """One-shot spectral estimate; see SpectralStdEstimator"""
    return SpectralStdEstimator(reference_spectrum, grid, noise_floor, noise_power).estimate(y)
