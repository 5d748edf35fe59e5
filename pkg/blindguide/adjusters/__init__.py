"""
Region-wise guidance scale adjusters
"""

from .base import BaseScaleAdjuster, AdjusterFactory
from .basic import ConstantAdjuster, VarianceAdjuster, local_variance
from .swt import SwtBands, swt_decompose, swt_reconstruct
from .loss import dgsa_loss, dgsa_loss_torch

__all__ = [
    "BaseScaleAdjuster", "AdjusterFactory", "ConstantAdjuster", "VarianceAdjuster", "local_variance",
    "SwtBands", "swt_decompose", "swt_reconstruct", "dgsa_loss", "dgsa_loss_torch",
]
