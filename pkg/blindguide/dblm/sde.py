"""
Trained blur-level regressor (optional estimator)

A small convolutional regressor is trained on exactly Gaussian-blurred images
to predict their std. An auxiliary term compares the clean image blurred at
the predicted std with the training input, weighted by gamma_std.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
import torch
from scipy.stats import spearmanr
from torch import nn

from ..exceptions import ConfigurationError
from ..logging.logger import Logger, get_logger
from ..ops.gaussian import blur, convolve, kernel_radius, make_kernel
from ..ops.image import Image, as_image
from ..ops.std_search import StdGrid, grid_values
from ..stores.tensors import load_weights, save_weights
from .restorers import wiener_restore
from .spectrum import BaseStdEstimator, StdEstimate

logger = get_logger(__name__)

VALIDATION_STDS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)


class SdeNet(nn.Module):
    """Conv/BN/LeakyReLU feature stack with two stride-2 stages and a three-layer head"""

    def __init__(self, channels: int = 1, width: int = 16):
        super().__init__()
        self.channels = channels
        self.width = width

        def block(c_in, c_out, stride=1):
            return [nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1),
                    nn.BatchNorm2d(c_out), nn.LeakyReLU(0.2)]

        self.features = nn.Sequential(
            *block(channels, width),
            *block(width, width),
            *block(width, 2 * width, stride=2),
            *block(2 * width, 2 * width),
            *block(2 * width, 4 * width, stride=2),
            nn.AdaptiveAvgPool2d(1),
        )
        self.head = nn.Sequential(
            nn.Linear(4 * width, 4 * width), nn.LeakyReLU(0.2),
            nn.Linear(4 * width, width), nn.LeakyReLU(0.2),
            nn.Linear(width, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C, H, W) unit-range images -> (B,) std divided by the grid maximum"""
        return self.head(torch.flatten(self.features(x - 0.5), 1)).squeeze(1)


def gaussian_blur_torch(x: torch.Tensor, std: torch.Tensor, radius: int) -> torch.Tensor:
    """
    Reflect-boundary separable blur with a per-sample, differentiable std

    Args:
        x: (B, C, H, W)
        std: (B,) positive stds
        radius: Fixed tap radius
    """
    offsets = torch.arange(-radius, radius + 1, dtype=x.dtype)
    weights = torch.exp(-offsets[None, :] ** 2 / (2.0 * std[:, None] ** 2))
    taps = weights / weights.sum(dim=1, keepdim=True)                        # (B, K)
    h, w = x.shape[2], x.shape[3]
    cols = torch.as_tensor(np.pad(np.arange(w), radius, mode="symmetric"))
    rows = torch.as_tensor(np.pad(np.arange(h), radius, mode="symmetric"))
    out = x.index_select(3, cols).unfold(3, 2 * radius + 1, 1)              # (B, C, H, W, K)
    out = (out * taps[:, None, None, None, :]).sum(-1)
    out = out.index_select(2, rows).unfold(2, 2 * radius + 1, 1)            # (B, C, H, W, K)
    return (out * taps[:, None, None, None, :]).sum(-1)


def _to_batch(images: np.ndarray) -> torch.Tensor:
    return torch.as_tensor(np.transpose(images, (0, 3, 1, 2)), dtype=torch.float32)


@dataclass
class SdeTrainingResult:
    net: SdeNet
    curve: pd.DataFrame
    val_mae: float
    val_spearman: float
    std_max: float


def train_sde(corpus: np.ndarray, grid: StdGrid, iterations: int = 1500, width: int = 16,
              batch_size: int = 8, learning_rate: float = 1e-3, gamma_std: float = 1.0,
              seed: int = 0, progress: Optional[Logger] = None) -> SdeTrainingResult:
    """
    Train SdeNet on exactly blurred copies of a clean corpus

    Args:
        corpus: Unit-range images (N, H, W, C)
        grid: Std grid the targets are drawn from
        iterations: Optimiser steps
        gamma_std: Weight of the blurred-image consistency term

    Returns:
        SdeTrainingResult with the validation MAE and rank correlation over a std sweep

    Raises:
        ConfigurationError: If the corpus is empty
    """
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.ndim != 4 or corpus.shape[0] == 0:
        raise ConfigurationError(f"SDE training needs a non-empty (N, H, W, C) corpus, got {corpus.shape}")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    stds = grid_values(grid)
    std_max = float(stds[-1])
    n = corpus.shape[0]
    n_val = max(1, n // 10) if n > 1 else 0
    train = corpus[: n - n_val]
    held_out = corpus[n - n_val:] if n_val else corpus
    aux_radius = min(kernel_radius(std_max), 2 * max(corpus.shape[1:3]))

    net = SdeNet(channels=corpus.shape[3], width=width)
    optimizer = torch.optim.Adam(net.parameters(), lr=learning_rate)
    every = max(1, iterations // 10)
    rows = []
    net.train()
    for iteration in range(1, iterations + 1):
        index = rng.integers(0, train.shape[0], size=batch_size)
        target = rng.choice(stds, size=batch_size)
        clean = train[index]
        blurred = np.stack([blur(img, s) for img, s in zip(clean, target)])

        prediction = net(_to_batch(blurred))
        target_t = torch.as_tensor(target / std_max, dtype=torch.float32)
        loss = torch.mean(torch.abs(prediction - target_t))
        if gamma_std > 0:
            predicted_std = torch.clamp(prediction * std_max, min=float(stds[0]))
            reblurred = gaussian_blur_torch(_to_batch(clean), predicted_std, aux_radius)
            loss = loss + gamma_std * torch.mean(torch.abs(reblurred - _to_batch(blurred)))

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        rows.append((iteration, float(loss.item())))
        if iteration % every == 0 or iteration == iterations:
            if progress is not None:
                progress.log_training_progress("sde", iteration, float(loss.item()))
            else:
                logger.info(f"sde iteration {iteration}: loss={loss.item():.6g}")

    estimator = TrainedStdEstimator(net, grid, std_max=std_max)
    val_mae, val_spearman = validate_estimator(estimator, held_out)
    logger.info(f"SDE validation: MAE={val_mae:.3f}, spearman={val_spearman:.3f}")
    return SdeTrainingResult(net=net, curve=pd.DataFrame(rows, columns=["iteration", "loss"]),
                             val_mae=val_mae, val_spearman=val_spearman, std_max=std_max)


def validate_estimator(estimator: BaseStdEstimator, images: np.ndarray, stds=VALIDATION_STDS):
    """Mean absolute error and Spearman correlation of predictions over a std sweep"""
    truth, predicted = [], []
    for img in images:
        for s in stds:
            truth.append(s)
            predicted.append(estimator.estimate(blur(img, s)).std_hat)
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    mae = float(np.mean(np.abs(truth - predicted)))
    rho = spearmanr(truth, predicted).correlation if np.ptp(predicted) > 0 else 0.0
    return mae, float(rho)


class TrainedStdEstimator(BaseStdEstimator):
    """Adapter exposing a trained SdeNet as a std estimator"""

    def __init__(self, net: SdeNet, grid: Optional[StdGrid] = None, std_max: Optional[float] = None,
                 noise_power: float = 1e-3):
        self.net = net
        self.grid = grid or StdGrid()
        self.stds = grid_values(self.grid)
        self.std_max = float(std_max if std_max is not None else self.stds[-1])
        self.noise_power = noise_power

    def predict(self, y: Image) -> float:
        self.net.eval()
        with torch.no_grad():
            value = float(self.net(_to_batch(as_image(y)[None]))[0]) * self.std_max
        return value

    def estimate(self, y: Image) -> StdEstimate:
        y = as_image(y)
        raw = self.predict(y)
        std_hat = self.grid.snap(raw)
        intermediate = convolve(wiener_restore(y, std_hat, self.noise_power), make_kernel(std_hat))
        return StdEstimate(std_hat=std_hat, intermediate=intermediate)


def save_sde(net: SdeNet, directory: Union[str, Path]) -> Path:
    arrays = {name: value.detach().cpu().numpy() for name, value in net.state_dict().items()}
    return save_weights(directory, arrays)


def load_sde(directory: Union[str, Path]) -> SdeNet:
    """Rebuild an SdeNet from saved weights; width and channels come from the first layer"""
    arrays = load_weights(directory)
    first = arrays.get("features.0.weight")
    if first is None:
        raise ConfigurationError(f"{directory} does not hold SDE weights")
    net = SdeNet(channels=int(first.shape[1]), width=int(first.shape[0]))
    state = {}
    for name, param in net.state_dict().items():
        if name not in arrays:
            raise ConfigurationError(f"{directory} is missing SDE parameter {name}")
        state[name] = torch.as_tensor(arrays[name], dtype=param.dtype).reshape(param.shape)
    net.load_state_dict(state)
    net.eval()
    return net
