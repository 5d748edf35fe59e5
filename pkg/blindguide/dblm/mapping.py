"""
Dynamic blur-level mapping: degraded input -> exactly Gaussian-blurred surrogate
"""

from dataclasses import dataclass
from typing import Optional

from ..exceptions import ParameterError
from ..logging.logger import get_logger
from ..ops.gaussian import convolve, make_kernel
from ..ops.image import Image, as_image
from .restorers import BaseRestorer, RestorerFactory
from .spectrum import BaseStdEstimator, StdEstimate

logger = get_logger(__name__)


def dblm_map(y: Image, restorer: BaseRestorer, std_hat: float) -> Image:
    """k_{std_hat} * restorer(y); the guidance measurement"""
    if std_hat < 0:
        raise ParameterError("std_hat", f"must be non-negative, got {std_hat}")
    return convolve(restorer.restore(as_image(y)), make_kernel(std_hat))


@dataclass(frozen=True, eq=False)
class DblmResult:
    std_hat: float
    y_acute: Image
    restored: Image
    estimate: StdEstimate


class DblmStage:
    """
    Estimate the blur level, restore at that level and re-blur

    The restorer is rebuilt per image because the Wiener restorer inverts the
    estimated std.
    """

    def __init__(self, estimator: BaseStdEstimator, restorer_kind: str = "wiener",
                 noise_power: float = 1e-3, std_override: Optional[float] = None):
        self.estimator = estimator
        self.restorer_kind = restorer_kind
        self.noise_power = noise_power
        self.std_override = std_override
        self.factory = RestorerFactory()

    def run(self, y: Image) -> DblmResult:
        y = as_image(y)
        estimate = self.estimator.estimate(y)
        std_hat = estimate.std_hat if self.std_override is None else float(self.std_override)
        restorer = self.factory.create_restorer(
            {"type": self.restorer_kind, "assumed_std": std_hat, "noise_power": self.noise_power}
        )
        restored = restorer.restore(y)
        y_acute = convolve(restored, make_kernel(std_hat))
        logger.debug(f"DBLM mapped input with std_hat={std_hat:.2f} ({self.restorer_kind})")
        return DblmResult(std_hat=std_hat, y_acute=y_acute, restored=restored, estimate=estimate)
