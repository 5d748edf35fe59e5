"""
Trainable guidance scale adjuster

Three 3x3 convolutions over the concatenated measurement and clean estimate,
with a sinusoidal timestep embedding added to the first layer's features. The
output is clamped to [0, 1]; the last layer starts at zero, so an untrained
network returns A = 0 everywhere.
"""

import math
from pathlib import Path
from typing import Union

import numpy as np
import torch
from torch import nn

from ..exceptions import ConfigurationError
from ..guidance.guidance_set import ScaleMap
from ..ops.image import Image, as_image
from ..stores.tensors import load_weights, save_weights
from .base import BaseScaleAdjuster

HIDDEN = 64


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding of (B,) timesteps into (B, dim)"""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / max(half, 1))
    args = t.float()[:, None] * freqs[None, :]
    embedding = torch.cat([torch.sin(args), torch.cos(args)], dim=1)
    if dim % 2:
        embedding = torch.cat([embedding, torch.zeros_like(embedding[:, :1])], dim=1)
    return embedding


class DgsaNet(nn.Module):
    def __init__(self, channels: int = 1, hidden: int = HIDDEN):
        super().__init__()
        self.channels = channels
        self.hidden = hidden
        self.conv1 = nn.Conv2d(2 * channels, hidden, 3, padding=1)
        self.time_proj = nn.Linear(hidden, hidden)
        self.conv2 = nn.Conv2d(hidden, hidden, 3, padding=1)
        self.conv3 = nn.Conv2d(hidden, channels, 3, padding=1)
        self.act = nn.ELU()
        nn.init.zeros_(self.conv3.weight)
        nn.init.zeros_(self.conv3.bias)

    def forward(self, y_acute: torch.Tensor, x_t0: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        """
        Args:
            y_acute: (B, C, H, W) measurement
            x_t0: (B, C, H, W) clean estimate
            t: (B,) timesteps

        Returns:
            (B, C, H, W) scale map in [0, 1]
        """
        h = self.act(self.conv1(torch.cat([y_acute, x_t0], dim=1)))
        h = h + self.time_proj(timestep_embedding(t, self.hidden))[:, :, None, None]
        h = self.act(self.conv2(h))
        # gradient is kept at exactly 0 and 1
        return torch.clamp(self.conv3(h), 0.0, 1.0)


def image_to_tensor(img: Image) -> torch.Tensor:
    return torch.as_tensor(np.transpose(as_image(img), (2, 0, 1))[None], dtype=torch.float32)


class DgsaAdjuster(BaseScaleAdjuster):
    """BaseScaleAdjuster backed by a DgsaNet"""

    def __init__(self, net: DgsaNet):
        self.net = net
        self.net.eval()

    def adjust(self, y_acute: Image, x_t0: Image, t: int) -> ScaleMap:
        with torch.no_grad():
            out = self.net(image_to_tensor(y_acute), image_to_tensor(x_t0), torch.tensor([int(t)]))
        return np.transpose(out[0].numpy().astype(np.float64), (1, 2, 0))

    def describe(self) -> str:
        return f"dgsa(channels={self.net.channels})"


def save_dgsa(net: DgsaNet, directory: Union[str, Path]) -> Path:
    arrays = {name: value.detach().cpu().numpy() for name, value in net.state_dict().items()}
    return save_weights(directory, arrays)


def load_dgsa(directory: Union[str, Path]) -> DgsaNet:
    """Rebuild a DgsaNet; channel and width come from the first layer's shape"""
    arrays = load_weights(directory)
    first = arrays.get("conv1.weight")
    if first is None:
        raise ConfigurationError(f"{directory} does not hold adjuster weights")
    net = DgsaNet(channels=int(first.shape[1]) // 2, hidden=int(first.shape[0]))
    state = {}
    for name, param in net.state_dict().items():
        if name not in arrays:
            raise ConfigurationError(f"{directory} is missing adjuster parameter {name}")
        state[name] = torch.as_tensor(arrays[name], dtype=param.dtype).reshape(param.shape)
    net.load_state_dict(state)
    net.eval()
    return net
