"""
Two-stage training of the DGSA scale adjuster

Each sample takes one adjusted guided step from x_t, formed by noising the
true image, and scores the clean estimate at t - 1 against that image. Stage 1
guides with exact Gaussian blurs; stage 2 with the frozen DBLM output of
synthetically degraded inputs. The loss is backpropagated through the step and
the (frozen) denoiser into the network.
"""

import copy
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from ..degradations.pipeline import DegradationParams, degrade
from ..diffusion.schedule import DiffusionSchedule, predict_x0, q_sample, reverse_step_mean, sample_noise
from ..dsst.table import DSSTable
from ..exceptions import ConfigurationError, EstimationError
from ..guidance.gradients import chain_through_denoiser, measurement_cotangent
from ..guidance.guidance_set import check_scale_map
from ..logging.logger import Logger, get_logger
from ..ops.gaussian import blur
from ..ops.image import Image, from_model, to_model
from .base import BaseScaleAdjuster
from .basic import ConstantAdjuster, local_variance
from .loss import dgsa_loss, dgsa_loss_torch
from .network import DgsaAdjuster, DgsaNet

logger = get_logger(__name__)

BASELINE_SCALES = (0.0, 0.25, 0.5, 0.75, 1.0)
TRAIN_STD_RANGE = (0.5, 8.0)
MIN_DOWNSAMPLED_SIDE = 4
MAX_REDRAWS = 8


class DenoiserEps(torch.autograd.Function):
    """eps(x, t) of a numpy denoiser as an autograd op; backward is the denoiser's vjp"""

    @staticmethod
    def forward(ctx, x: torch.Tensor, denoiser, t: int) -> torch.Tensor:
        ctx.denoiser = denoiser
        ctx.t = t
        ctx.save_for_backward(x)
        eps = denoiser.eps(_to_image(x), t)
        return _from_image(eps)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        (x,) = ctx.saved_tensors
        vjp = ctx.denoiser.vjp(_to_image(x), ctx.t, _to_image(grad_output))
        return _from_image(vjp), None, None


def _to_image(x: torch.Tensor) -> np.ndarray:
    """(C, H, W) tensor -> (H, W, C) float64 array"""
    return np.transpose(x.detach().cpu().numpy().astype(np.float64), (1, 2, 0))


def _from_image(img: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(np.transpose(img, (2, 0, 1))))


@dataclass
class DgsaComponents:
    """Frozen parts of the guided step the adjuster is trained inside"""
    denoiser: object
    sched: DiffusionSchedule
    table: DSSTable
    dblm: Optional[object] = None
    s_base: float = 1.0
    compression_step: float = 0.002


@dataclass(eq=False)
class TrainingProbe:
    """One guided-step instance: everything but the scale map is fixed"""
    x0: Image
    y_acute: Image
    std: float
    t: int
    x_prime: Image
    x_t0: Image
    grad: Image


def probe_step(x0: Image, y_acute: Image, std: float, t: int, seed: int,
               components: DgsaComponents) -> TrainingProbe:
    """
    Noise the true image to step t and take the unscaled parts of a guided step

    Args:
        x0: Clean image (unit range)
        y_acute: Guidance measurement (unit range)
        std: Guidance kernel std
        t: Step in [1, T - 1]
        seed: Seed of the forward-jump and step noise
    """
    sched = components.sched
    x0_m = to_model(x0)
    noise = np.random.default_rng(seed).standard_normal(x0_m.shape)
    x_t = q_sample(x0_m, t, noise, sched)
    eps = components.denoiser.eps(x_t, t)
    x_prime = reverse_step_mean(x_t, t, eps, sample_noise(seed, t, x_t.shape), sched)
    x_t0 = predict_x0(x_t, t, eps, sched)
    c, _ = measurement_cotangent(x_t0, to_model(y_acute), std)
    grad = chain_through_denoiser(c, x_t, t, components.denoiser, sched)
    return TrainingProbe(x0=np.asarray(x0, dtype=np.float64), y_acute=y_acute, std=float(std), t=int(t),
                         x_prime=x_prime, x_t0=x_t0, grad=grad)


def _degraded_measurement(x0: Image, rng: np.random.Generator, seed: int, components: DgsaComponents):
    """DBLM output of a randomly degraded copy of x0; parameters are redrawn while the estimate is degenerate"""
    max_scale = min(x0.shape[0], x0.shape[1]) / MIN_DOWNSAMPLED_SIDE
    for attempt in range(MAX_REDRAWS):
        params = DegradationParams.sample(rng, max_scale)
        degraded = degrade(x0, params, seed + attempt, components.compression_step)
        try:
            return components.dblm.run(degraded)
        except EstimationError as e:
            logger.debug(f"Redrawing degradation {params.to_dict()}: {e}")
    raise EstimationError("degenerate_spectrum", f"no usable degradation after {MAX_REDRAWS} draws")


def draw_probe(x0: Image, stage: int, rng: np.random.Generator, components: DgsaComponents,
               std_range: Tuple[float, float] = TRAIN_STD_RANGE) -> TrainingProbe:
    """Random measurement and step for one clean image"""
    seed = int(rng.integers(0, 2**31 - 1))
    if stage == 1:
        std = float(rng.uniform(*std_range))
        y_acute = blur(x0, std)
    else:
        if components.dblm is None:
            raise ConfigurationError("stage 2 adjuster training needs a DBLM stage")
        result = _degraded_measurement(x0, rng, seed, components)
        std, y_acute = result.std_hat, result.y_acute
    t_start = max(1, components.table.lookup(std).t_start)
    t = int(rng.integers(1, t_start + 1))
    return probe_step(x0, y_acute, std, t, seed, components)


def make_validation_probes(corpus: np.ndarray, components: DgsaComponents, n: Optional[int] = None,
                           seed: int = 0, stage: int = 1) -> List[TrainingProbe]:
    """Fixed probes over the first n images of a held-out corpus"""
    rng = np.random.default_rng(seed)
    images = corpus if n is None else corpus[:n]
    return [draw_probe(x0, stage, rng, components) for x0 in images]


def step_ahead_estimate(probe: TrainingProbe, scale: np.ndarray, components: DgsaComponents) -> Image:
    """Unit-range clean estimate at t - 1 after the scaled guided step"""
    x_prev = probe.x_prime - components.s_base * scale * probe.grad
    t_prev = probe.t - 1
    eps = components.denoiser.eps(x_prev, t_prev)
    return from_model(predict_x0(x_prev, t_prev, eps, components.sched))


def evaluate_adjuster_loss(adjuster: BaseScaleAdjuster, probes: Sequence[TrainingProbe],
                           components: DgsaComponents, gamma: Sequence[float],
                           proxy_weight: float = 1.0) -> float:
    """Mean step-ahead loss of an adjuster over fixed probes"""
    losses = []
    for probe in probes:
        scale = check_scale_map(adjuster.adjust(probe.y_acute, from_model(probe.x_t0), probe.t), probe.x0.shape)
        estimate = step_ahead_estimate(probe, scale, components)
        losses.append(dgsa_loss(estimate, probe.x0, gamma, proxy_weight))
    return float(np.mean(losses))


def constant_baseline_losses(probes: Sequence[TrainingProbe], components: DgsaComponents,
                             gamma: Sequence[float], proxy_weight: float = 1.0,
                             scales: Sequence[float] = BASELINE_SCALES) -> pd.DataFrame:
    """Loss of every constant scale in `scales`"""
    rows = [(float(s), evaluate_adjuster_loss(ConstantAdjuster(s), probes, components, gamma, proxy_weight))
            for s in scales]
    return pd.DataFrame(rows, columns=["scale", "loss"])


@dataclass(frozen=True)
class RegionScaleMeans:
    flat: float
    textured: float


def region_scale_means(adjuster: BaseScaleAdjuster, probes: Sequence[TrainingProbe],
                       window: int = 5) -> RegionScaleMeans:
    """
    Mean scale over flat and textured pixels of the clean images

    Flat pixels have local variance at or below the 25th percentile of their
    image, textured pixels at or above the 75th.
    """
    flat, textured = [], []
    for probe in probes:
        scale = check_scale_map(adjuster.adjust(probe.y_acute, from_model(probe.x_t0), probe.t), probe.x0.shape)
        variance = local_variance(probe.x0, window)
        low, high = np.percentile(variance, [25, 75])
        flat.append(scale[variance <= low])
        textured.append(scale[variance >= high])
    return RegionScaleMeans(flat=float(np.mean(np.concatenate(flat))),
                            textured=float(np.mean(np.concatenate(textured))))


@dataclass
class DgsaTrainingResult:
    net: DgsaNet
    curve: pd.DataFrame
    diverged: bool = False
    diverged_at: Optional[int] = None


def _batch_loss(net: DgsaNet, probes: Sequence[TrainingProbe], components: DgsaComponents,
                gamma: Sequence[float], proxy_weight: float) -> torch.Tensor:
    y = torch.stack([_from_image(p.y_acute) for p in probes]).float()
    x_t0 = torch.stack([_from_image(from_model(p.x_t0)) for p in probes]).float()
    t = torch.tensor([p.t for p in probes])
    scale = net(y, x_t0, t).double()

    sched = components.sched
    estimates = []
    for b, probe in enumerate(probes):
        x_prev = _from_image(probe.x_prime) - components.s_base * scale[b] * _from_image(probe.grad)
        t_prev = probe.t - 1
        eps = DenoiserEps.apply(x_prev, components.denoiser, t_prev)
        x0_prev = (x_prev - sched.sqrt_one_minus_alpha_bar(t_prev) * eps) / sched.sqrt_alpha_bar(t_prev)
        estimates.append((x0_prev + 1.0) / 2.0)
    target = torch.stack([_from_image(p.x0) for p in probes])
    return dgsa_loss_torch(torch.stack(estimates), target, gamma, proxy_weight)


@dataclass(eq=False)
class Checkpoint:
    iteration: int
    state: dict
    loss: float


def _curve(rows) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=["iteration", "stage", "loss", "validation"])


def _best_constant(steps: Sequence[TrainingProbe], components: DgsaComponents, gamma: Sequence[float],
                   proxy_weight: float) -> float:
    losses = constant_baseline_losses(steps, components, gamma, proxy_weight)
    return float(losses.loc[losses["loss"].idxmin(), "scale"])


def _validation_loss(net: DgsaNet, steps: Optional[Sequence[TrainingProbe]], components: DgsaComponents,
                     gamma: Sequence[float], proxy_weight: float) -> float:
    """Held-out loss of the network as it stands; inf without held-out steps"""
    if not steps:
        return float("inf")
    loss = evaluate_adjuster_loss(DgsaAdjuster(net), steps, components, gamma, proxy_weight)
    net.train()
    return loss


def train_dgsa(corpus: np.ndarray, components: DgsaComponents, stage1_iters: int = 2000,
               stage2_iters: int = 700, gamma: Sequence[float] = (0.0, 0.01, 0.01, 0.05),
               proxy_weight: float = 1.0, learning_rate: float = 1e-3, momentum: float = 0.9,
               batch_size: int = 8, seed: int = 0, std_range: Tuple[float, float] = TRAIN_STD_RANGE,
               progress: Optional[Logger] = None, net: Optional[DgsaNet] = None,
               validation: Optional[Sequence[TrainingProbe]] = None) -> DgsaTrainingResult:
    """
    Train a DgsaNet inside frozen guided steps

    Args:
        corpus: Clean unit-range images (N, H, W, C)
        components: Denoiser, schedule, DSST table and (for stage 2) the DBLM stage
        stage1_iters: Iterations on exact Gaussian blurs
        stage2_iters: Iterations on DBLM outputs of degraded images
        gamma: LL, LH, HL, HH band weights of the loss
        proxy_weight: Weight of the gradient-magnitude similarity term
        progress: Logger receiving training checkpoints
        net: Network to continue training; a fresh one by default
        validation: Held-out steps; a fresh network then starts at the best constant
            scale on them, and the checkpoint with the lowest loss on them is returned

    Returns:
        DgsaTrainingResult; on a non-finite loss the network holds the last
        checkpoint and `diverged` is set. With validation steps the curve gains a
        `validation` column, filled at checkpoints

    Raises:
        ConfigurationError: If the corpus is empty or stage 2 lacks a DBLM stage
    """
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.ndim != 4 or corpus.shape[0] == 0:
        raise ConfigurationError(f"adjuster training needs a non-empty (N, H, W, C) corpus, got {corpus.shape}")
    if stage2_iters > 0 and components.dblm is None:
        raise ConfigurationError("stage 2 adjuster training needs a DBLM stage")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    if net is None:
        net = DgsaNet(channels=corpus.shape[3])
        if validation:
            start = _best_constant(validation, components, gamma, proxy_weight)
            with torch.no_grad():
                net.conv3.bias.fill_(start)
            logger.info(f"DGSA starts at constant scale {start:g}")
    optimizer = torch.optim.SGD(net.parameters(), lr=learning_rate, momentum=momentum)
    total = stage1_iters + stage2_iters
    every = max(1, total // 20)
    checkpoint = copy.deepcopy(net.state_dict())
    best = Checkpoint(0, copy.deepcopy(checkpoint), _validation_loss(net, validation, components, gamma, proxy_weight))
    rows = []
    net.train()

    for iteration in range(1, total + 1):
        stage = 1 if iteration <= stage1_iters else 2
        index = rng.integers(0, corpus.shape[0], size=batch_size)
        probes = [draw_probe(corpus[i], stage, rng, components, std_range) for i in index]

        loss = _batch_loss(net, probes, components, gamma, proxy_weight)
        value = float(loss.item())
        if not np.isfinite(value):
            logger.error(f"DGSA training diverged at iteration {iteration}; restoring the last checkpoint")
            net.load_state_dict(best.state if validation else checkpoint)
            net.eval()
            return DgsaTrainingResult(net=net, curve=_curve(rows), diverged=True, diverged_at=iteration)

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        held_out = float("nan")
        if iteration % every == 0 or iteration == total:
            checkpoint = copy.deepcopy(net.state_dict())
            if validation:
                held_out = _validation_loss(net, validation, components, gamma, proxy_weight)
                if held_out <= best.loss:
                    best = Checkpoint(iteration, copy.deepcopy(checkpoint), held_out)
            if progress is not None:
                progress.log_training_progress("dgsa", iteration, value, stage)
            else:
                logger.info(f"dgsa iteration {iteration} (stage {stage}): loss={value:.6g}")
        rows.append((iteration, stage, value, held_out))

    if validation:
        net.load_state_dict(best.state)
        logger.info(f"DGSA keeps checkpoint {best.iteration} (held-out loss {best.loss:.6g})")
    net.eval()
    return DgsaTrainingResult(net=net, curve=_curve(rows))
