"""
Base scale adjuster interface and factory
"""

from abc import ABC, abstractmethod
from typing import Any, Dict

from ..guidance.guidance_set import ScaleMap
from ..ops.image import Image


class BaseScaleAdjuster(ABC):
    """Produces the region-wise guidance scale map A_t"""

    @abstractmethod
    def adjust(self, y_acute: Image, x_t0: Image, t: int) -> ScaleMap:
        """
        Scale map for one guided step

        Args:
            y_acute: Guidance measurement (unit range)
            x_t0: Current clean-image estimate (unit range)
            t: Timestep

        Returns:
            Array shaped like x_t0 with every entry in [0, 1]
        """

    def describe(self) -> str:
        return type(self).__name__


class AdjusterFactory:
    """Factory for creating scale adjusters"""

    def __init__(self, logger=None):
        self.logger = logger

    def create_adjuster(self, config: Dict[str, Any]) -> BaseScaleAdjuster:
        """
        Create an adjuster from its configuration

        Raises:
            ValueError: If the adjuster type is missing or not supported
        """
        adjuster_type = config.get("type")

        if not adjuster_type:
            raise ValueError("Adjuster configuration missing 'type' field")

        if adjuster_type == "constant":
            from .basic import ConstantAdjuster
            return ConstantAdjuster(config.get("scale", 1.0))
        elif adjuster_type == "variance":
            from .basic import VarianceAdjuster
            return VarianceAdjuster(config.get("window", 5), config.get("pivot", 0.01))
        elif adjuster_type == "dgsa":
            from .network import DgsaAdjuster, load_dgsa
            if "net" in config:
                return DgsaAdjuster(config["net"])
            return DgsaAdjuster(load_dgsa(config["path"]))
        else:
            raise ValueError(f"Unsupported adjuster type: {adjuster_type}")
