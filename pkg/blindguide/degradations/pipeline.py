"""
Synthetic degradation: blur, downsample, noise, compress, upsample back
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from ..exceptions import ParameterError
from ..logging.logger import get_logger
from ..ops.image import Image, as_image
from .base import BaseDegradation, DegradationFactory

logger = get_logger(__name__)

RANGES = {
    "sigma": (0.1, 15.0),
    "C": (0.8, 32.0),
    "zeta": (0.0, 20.0),
    "delta": (30, 100),
}


@dataclass(frozen=True)
class DegradationParams:
    """Blur std, scale factor, noise level (0-255 scale) and quality"""
    sigma: float = 0.1
    C: float = 1.0
    zeta: float = 0.0
    delta: int = 100

    def __post_init__(self):
        for name, (low, high) in RANGES.items():
            value = getattr(self, name)
            if not low <= value <= high:
                raise ParameterError(name, f"{value} outside [{low}, {high}]")
        if int(self.delta) != self.delta:
            raise ParameterError("delta", f"must be an integer, got {self.delta}")

    @classmethod
    def sample(cls, rng: np.random.Generator, max_scale: Optional[float] = None) -> "DegradationParams":
        """
        Uniform draw over the admissible ranges

        Args:
            rng: Generator
            max_scale: Upper bound on C below the range maximum, for images too small to downsample fully
        """
        low, high = RANGES["C"]
        if max_scale is not None:
            high = min(high, max(low, float(max_scale)))
        return cls(
            sigma=float(rng.uniform(*RANGES["sigma"])),
            C=float(rng.uniform(low, high)),
            zeta=float(rng.uniform(*RANGES["zeta"])),
            delta=int(rng.integers(RANGES["delta"][0], RANGES["delta"][1] + 1)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"sigma": self.sigma, "C": self.C, "zeta": self.zeta, "delta": self.delta}


class DegradationPipeline:
    """Ordered degradation stages sharing one seeded generator"""

    def __init__(self, stage_configs: List[Dict[str, Any]]):
        factory = DegradationFactory()
        self.stage_configs = stage_configs
        self.stages: List[BaseDegradation] = [factory.create_degradation(c) for c in stage_configs]

    @classmethod
    def from_params(cls, p: DegradationParams, shape, compression_step: float = 0.002) -> "DegradationPipeline":
        return cls([
            {"type": "blur", "std": p.sigma},
            {"type": "resize", "factor": p.C},
            {"type": "noise", "zeta": p.zeta},
            {"type": "compress", "quality": p.delta, "step": compression_step},
            {"type": "resize", "size": (shape[0], shape[1])},
        ])

    def run(self, image: Image, seed: int) -> Image:
        rng = np.random.default_rng(seed)
        out = as_image(image)
        for stage in self.stages:
            out = stage.apply(out, rng)
        return out


def degrade(x: Image, p: DegradationParams, seed: int, compression_step: float = 0.002) -> Image:
    """
    Degrade a unit-range image; deterministic given seed

    Args:
        x: Clean image
        p: Degradation parameters
        seed: Seed of the noise generator
        compression_step: Quantisation step per unit of (100 - delta)

    Returns:
        Image with the shape of x
    """
    x = as_image(x)
    if compression_step < 0:
        raise ParameterError("compression_step", f"must be non-negative, got {compression_step}")
    logger.debug(f"Degrading {x.shape} with {p.to_dict()}")
    return DegradationPipeline.from_params(p, x.shape, compression_step).run(x, seed)


def degrade_corpus(corpus: np.ndarray, p: Optional[DegradationParams], seed: int,
                   compression_step: float = 0.002) -> np.ndarray:
    """Degrade every image; per-image seeds seed + index, params drawn per image when p is None"""
    rng = np.random.default_rng(seed)
    out = []
    for index, image in enumerate(corpus):
        params = p if p is not None else DegradationParams.sample(rng)
        out.append(degrade(image, params, seed + index, compression_step))
    return np.stack(out)
