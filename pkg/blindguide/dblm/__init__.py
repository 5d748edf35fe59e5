"""
Dynamic blur-level mapping: restorers, std estimators and the mapping stage
"""

from .restorers import BaseRestorer, IdentityRestorer, WienerRestorer, RestorerFactory, wiener_restore
from .spectrum import (
    BaseStdEstimator,
    RadialSpectrum,
    SpectralStdEstimator,
    StdEstimate,
    estimate_std,
)
from .mapping import DblmResult, DblmStage, dblm_map

__all__ = [
    "BaseRestorer", "IdentityRestorer", "WienerRestorer", "RestorerFactory", "wiener_restore",
    "BaseStdEstimator", "RadialSpectrum", "SpectralStdEstimator", "StdEstimate", "estimate_std",
    "DblmResult", "DblmStage", "dblm_map",
]
