"""
Std grid and the brute-force search for the smallest sufficient blur
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..exceptions import ParameterError
from ..logging.logger import get_logger
from .gaussian import make_kernel, convolve
from .image import Image, as_image, check_same_shape

logger = get_logger(__name__)

MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class StdGrid:
    """Ascending grid std_min, std_min + std_step, ..., std_max"""
    std_min: float = 0.1
    std_max: float = 15.0
    std_step: float = 0.1

    def __post_init__(self):
        if not self.std_min > 0:
            raise ParameterError("std_min", f"must be positive, got {self.std_min}")
        if not self.std_step > 0:
            raise ParameterError("std_step", f"must be positive, got {self.std_step}")
        if self.std_max < self.std_min:
            raise ParameterError("std_max", f"must be >= std_min ({self.std_max} < {self.std_min})")

    @classmethod
    def from_config(cls, config) -> "StdGrid":
        return cls(config.std_min, config.std_max, config.std_step)

    def values(self) -> np.ndarray:
        count = int(np.floor((self.std_max - self.std_min) / self.std_step + 1e-9)) + 1
        return np.round(self.std_min + self.std_step * np.arange(count), 10)

    @property
    def maximum(self) -> float:
        return float(self.values()[-1])

    def contains(self, std: float) -> bool:
        return self.std_min - 1e-9 <= std <= self.maximum + 1e-9

    def snap(self, std: float) -> float:
        """Nearest grid value, ties toward the larger one, clamped to the grid"""
        values = self.values()
        return float(values[_nearest_index(values, std)])


def _nearest_index(values: np.ndarray, std: float) -> int:
    distance = np.abs(values - std)
    best = distance.min()
    # ties resolve to the last (largest) candidate
    return int(np.flatnonzero(distance <= best + 1e-9)[-1])


@dataclass(frozen=True, eq=False)
class StdSearchResult:
    std_star: float
    saturated: bool
    stds: np.ndarray
    errors: np.ndarray

    @property
    def is_monotone(self) -> bool:
        """Error curve non-increasing in std"""
        return bool(np.all(np.diff(self.errors) <= MONOTONE_SLACK))


def grid_values(grid: Union[StdGrid, Sequence[float]]) -> np.ndarray:
    """Grid as an ascending array; raises on empty or unsorted grids"""
    values = grid.values() if isinstance(grid, StdGrid) else np.asarray(list(grid), dtype=np.float64)
    if values.size == 0:
        raise ParameterError("grid", "std grid is empty")
    if np.any(np.diff(values) <= 0):
        raise ParameterError("grid", "std grid must be strictly ascending")
    return values


def blur_error_curve(restored: Image, x: Image, stds: Sequence[float]) -> np.ndarray:
    """Mean absolute difference between k_std * restored and k_std * x for every std"""
    check_same_shape(restored, x, "restored and reference")
    diff = as_image(restored) - as_image(x)
    return np.array([float(np.mean(np.abs(convolve(diff, make_kernel(s))))) for s in stds])


def find_std_star(y: Image, x: Image, restorer, xi: float,
                  grid: Union[StdGrid, Sequence[float]]) -> StdSearchResult:
    """
    Smallest grid std at which the restored image and the reference agree after blurring

    Args:
        y: Degraded image
        x: Clean reference of the same shape
        restorer: Object with restore(image)
        xi: Tolerance on the per-pixel mean absolute difference
        grid: Ascending std grid

    Returns:
        StdSearchResult; when no std meets the tolerance, the grid maximum with saturated=True
    """
    check_same_shape(y, x, "y and x")
    stds = grid_values(grid)
    restored = restorer.restore(as_image(y))
    errors = blur_error_curve(restored, x, stds)

    rises = np.diff(errors)
    if np.any(rises > MONOTONE_SLACK):
        worst = float(rises.max())
        logger.warning(f"std* error curve is not monotone (largest increase {worst:.3g}); boundary effects")

    feasible = np.flatnonzero(errors < xi)
    if feasible.size == 0:
        logger.warning(f"std* search saturated at {stds[-1]:.2f}: no grid std meets xi={xi}")
        return StdSearchResult(float(stds[-1]), True, stds, errors)
    return StdSearchResult(float(stds[feasible[0]]), False, stds, errors)
