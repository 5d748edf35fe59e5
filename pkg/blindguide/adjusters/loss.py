"""
Adjuster training loss: weighted SWT-band L1 plus a gradient-magnitude
similarity distance standing in for a learned perceptual term

The numpy entry point evaluates the torch definition in float64, so training
and evaluation share one implementation.
"""

from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from ..exceptions import DimensionError, ParameterError
from ..ops.image import Image, as_image
from .swt import swt_decompose_torch

GMS_CONSTANT = 0.0026
MAGNITUDE_EPS = 1e-12


def gradient_magnitude_torch(x: torch.Tensor) -> torch.Tensor:
    """Forward-difference gradient magnitude of (B, C, H, W), zero derivative at the far edge"""
    dx = F.pad(x[..., :, 1:] - x[..., :, :-1], (0, 1))
    dy = F.pad(x[..., 1:, :] - x[..., :-1, :], (0, 0, 0, 1))
    return torch.sqrt(dx ** 2 + dy ** 2 + MAGNITUDE_EPS)


def gms_distance_torch(a: torch.Tensor, b: torch.Tensor, c: float = GMS_CONSTANT) -> torch.Tensor:
    """1 - mean gradient-magnitude similarity, per batch item"""
    ma = gradient_magnitude_torch(a)
    mb = gradient_magnitude_torch(b)
    similarity = (2.0 * ma * mb + c) / (ma ** 2 + mb ** 2 + c)
    return 1.0 - similarity.mean(dim=(1, 2, 3))


def dgsa_loss_torch(prediction: torch.Tensor, target: torch.Tensor, gamma: Sequence[float],
                    proxy_weight: float = 1.0) -> torch.Tensor:
    """
    Mean over the batch of sum_i gamma_i |band_i(prediction) - band_i(target)|_1 + proxy

    Args:
        prediction: (B, C, H, W) unit-range estimate
        target: (B, C, H, W) clean images
        gamma: Weights of the LL, LH, HL, HH bands
        proxy_weight: Weight of the gradient-magnitude similarity distance
    """
    if len(gamma) != 4:
        raise ParameterError("gamma", f"needs four band weights, got {len(gamma)}")
    if prediction.shape != target.shape:
        raise DimensionError(f"prediction {tuple(prediction.shape)} and target {tuple(target.shape)} differ")
    bands_p = swt_decompose_torch(prediction)
    bands_t = swt_decompose_torch(target)
    loss = torch.zeros(prediction.shape[0], dtype=prediction.dtype)
    for weight, bp, bt in zip(gamma, bands_p, bands_t):
        if weight:
            loss = loss + float(weight) * torch.abs(bp - bt).mean(dim=(1, 2, 3))
    if proxy_weight:
        loss = loss + float(proxy_weight) * gms_distance_torch(prediction, target)
    return loss.mean()


def _as_tensor(img: Image) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(np.transpose(as_image(img), (2, 0, 1))))[None]


def dgsa_loss(x_t1_0: Image, x0: Image, gamma: Sequence[float], proxy_weight: float = 1.0) -> float:
    """Loss between a one-step-ahead clean estimate and the true image (unit range)"""
    if np.shape(x_t1_0) != np.shape(x0):
        raise DimensionError(f"images differ in shape: {np.shape(x_t1_0)} vs {np.shape(x0)}")
    with torch.no_grad():
        return float(dgsa_loss_torch(_as_tensor(x_t1_0), _as_tensor(x0), gamma, proxy_weight))
