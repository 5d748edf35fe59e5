"""
Guidance measurements, sampler state and per-step records
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ContractViolation, ParameterError
from ..ops.gaussian import DELTA_THRESHOLD, convolve, make_kernel
from ..ops.image import Image, as_image, to_model
from ..ops.std_search import StdGrid

# Region-wise guidance scale, shaped like the image, every entry in [0, 1]
ScaleMap = np.ndarray


def check_scale_map(values: np.ndarray, shape) -> ScaleMap:
    """Broadcast to the image shape and verify the [0, 1] range"""
    values = np.broadcast_to(np.asarray(values, dtype=np.float64), shape)
    if not np.all((values >= 0.0) & (values <= 1.0)):
        raise ContractViolation("scale map entries must lie in [0, 1]")
    return values


@dataclass(frozen=True, eq=False)
class GuidanceItem:
    """One Gaussian-blurred guidance image (unit range) with its std, weight and activation step"""
    y_acute: Image
    std: float
    weight: float
    t_start: int

    @cached_property
    def target(self) -> Image:
        """The measurement in the model domain"""
        return to_model(self.y_acute)


@dataclass(frozen=True, eq=False)
class GuidanceSet:
    """Guidance items ordered by descending std; item 0 activates first"""
    items: Tuple[GuidanceItem, ...]

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ParameterError("items", "guidance set is empty")
        weights = np.array([item.weight for item in items])
        if np.any(weights <= 0):
            raise ParameterError("weights", "guidance weights must be positive")
        if np.any(np.diff(weights) > 1e-12):
            raise ParameterError("weights", "guidance weights must be non-increasing")
        if np.any(np.diff([item.std for item in items]) > 1e-12):
            raise ParameterError("stds", "guidance items must be ordered by descending std")
        shape = items[0].y_acute.shape
        if any(item.y_acute.shape != shape for item in items):
            raise ParameterError("y_acute", "guidance images differ in shape")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def global_t_start(self) -> int:
        return int(self.items[0].t_start)

    @property
    def stds(self) -> Tuple[float, ...]:
        return tuple(float(item.std) for item in self.items)

    @property
    def shape(self):
        return self.items[0].y_acute.shape

    def active(self, t: int) -> np.ndarray:
        return np.array([t <= item.t_start for item in self.items])

    def active_weights(self, t: int) -> np.ndarray:
        """Weights renormalised over the items active at t; zero for inactive items"""
        active = self.active(t)
        weights = np.array([item.weight for item in self.items]) * active
        total = weights.sum()
        return weights / total if total > 0 else weights

    @classmethod
    def from_dblm(cls, restored: Image, std_hat: float, n: int, offsets: Sequence[float],
                  weights: Sequence[float], grid: StdGrid, table=None,
                  t_start: Optional[int] = None) -> "GuidanceSet":
        """
        Guidance items k_{std_i} * restored with std_i = max(std_hat - offset_i, grid minimum)

        Args:
            restored: Restorer output (unit range)
            std_hat: Estimated blur std
            n: Number of items
            offsets: Std offsets per item, non-decreasing
            weights: lambda weights per item
            grid: Std grid; its minimum floors the item stds
            table: DSSTable giving each item's starting step
            t_start: Fixed starting step for every item, replacing the table

        Raises:
            ParameterError: If fewer offsets or weights than items are given
        """
        if len(offsets) < n or len(weights) < n:
            raise ParameterError("n_guidance", f"need {n} offsets and weights, got {len(offsets)} and {len(weights)}")
        if table is None and t_start is None:
            raise ParameterError("t_start", "either a DSST table or a fixed starting step is required")
        restored = as_image(restored)
        items = []
        for i in range(n):
            std = max(float(std_hat) - float(offsets[i]), grid.std_min)
            start = int(t_start) if t_start is not None else table.lookup(std).t_start
            start = max(1, start)
            y_acute = convolve(restored, make_kernel(std))
            items.append(GuidanceItem(y_acute=y_acute, std=std, weight=float(weights[i]), t_start=start))
        return cls(tuple(items))


@dataclass(frozen=True, eq=False)
class SamplerState:
    """Model-domain sample at step t with the refined std of every guidance item"""
    x_t: Image
    t: int
    stds: Tuple[float, ...]
    rng_seed: int

    def __post_init__(self):
        stds = tuple(float(s) for s in self.stds)
        if any(s <= 0 for s in stds):
            raise ParameterError("stds", "refined stds must be positive")
        object.__setattr__(self, "stds", stds)


def clamp_std(std: float, grid_max: float) -> float:
    return float(min(max(std, DELTA_THRESHOLD), grid_max))


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of one guided step"""
    t: int
    residual: float
    stds: Tuple[float, ...]
    mean_scale: float
    active: Tuple[bool, ...] = field(default=())
