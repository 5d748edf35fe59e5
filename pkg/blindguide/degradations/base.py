"""
Base degradation stage interface and factory
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np


class BaseDegradation(ABC):
    """Abstract base class for one stage of the synthetic degradation chain"""

    def __init__(self, config: Dict[str, Any]):
        self.config = config

    @abstractmethod
    def apply(self, image: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """
        Apply the stage

        Args:
            image: (H, W, C) float array
            rng: Generator owned by the enclosing degrade call

        Returns:
            Degraded array; its spatial size may differ from the input
        """


class DegradationFactory:
    """Factory for creating degradation stages"""

    def create_degradation(self, config: Dict[str, Any]) -> BaseDegradation:
        """
        Create a stage from its configuration

        Raises:
            ValueError: If the stage type is missing or not supported
        """
        stage_type: Optional[str] = config.get("type")

        if not stage_type:
            raise ValueError("Degradation configuration missing 'type' field")

        if stage_type == "blur":
            from .basic import BlurDegradation
            return BlurDegradation(config)
        elif stage_type == "resize":
            from .basic import ResizeDegradation
            return ResizeDegradation(config)
        elif stage_type == "noise":
            from .basic import NoiseDegradation
            return NoiseDegradation(config)
        elif stage_type == "compress":
            from .basic import CompressionDegradation
            return CompressionDegradation(config)
        else:
            raise ValueError(f"Unsupported degradation type: {stage_type}")
