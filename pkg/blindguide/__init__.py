"""
blindguide - blind image restoration by guided diffusion sampling

Degraded images are mapped to Gaussian-blurred surrogates, a per-image
starting step is read from a precomputed table, and a guided DDPM chain
refines the kernel std on-line while a scale map weights the guidance per
region.
"""

__version__ = "1.0.0"

from .exceptions import (
    BlindGuideError,
    ConfigurationError,
    ContractViolation,
    DimensionError,
    EstimationError,
    ParameterError,
    StageError,
)
from .config.settings import RunConfig, load_config
from .core.pipeline import RestorationPipeline, load_components, run_restoration

__all__ = [
    "__version__", "BlindGuideError", "ConfigurationError", "ContractViolation", "DimensionError",
    "EstimationError", "ParameterError", "StageError", "RunConfig", "load_config",
    "RestorationPipeline", "load_components", "run_restoration",
]
