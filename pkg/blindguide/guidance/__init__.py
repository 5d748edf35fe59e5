"""
Guidance sets and data-fidelity gradients
"""

from .guidance_set import GuidanceItem, GuidanceSet, SamplerState, ScaleMap, StepRecord, check_scale_map, clamp_std
from .gradients import fidelity_gradient, fidelity_loss, std_gradient

__all__ = ["GuidanceItem", "GuidanceSet", "SamplerState", "ScaleMap", "StepRecord", "check_scale_map",
           "clamp_std", "fidelity_gradient", "fidelity_loss", "std_gradient"]
