"""
Guided reverse-diffusion engine
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..adjusters.base import BaseScaleAdjuster
from ..diffusion.schedule import (
    DiffusionSchedule,
    initial_noise_seed,
    predict_x0,
    q_sample,
    reverse_step_mean,
    sample_noise,
)
from ..exceptions import ContractViolation, ParameterError
from ..guidance.gradients import chain_through_denoiser, measurement_cotangent, std_derivative_from_residual
from ..guidance.guidance_set import GuidanceSet, SamplerState, StepRecord, check_scale_map, clamp_std
from ..logging.logger import Logger, get_logger
from ..ops.image import Image, from_model, to_model
from ..utils.helpers import atomic_write

logger = get_logger(__name__)


def guided_step(state: SamplerState, gset: GuidanceSet, adjuster: BaseScaleAdjuster, denoiser,
                sched: DiffusionSchedule, s_base: float = 1.0, std_lr: float = 1.0,
                grid_max: float = 15.0, trace: Optional[List[StepRecord]] = None) -> SamplerState:
    """
    One guided ancestral step x_t -> x_{t-1} with std refinement

    Args:
        state: Sampler state at step t (model domain)
        gset: Guidance set; its stds are replaced by state.stds
        adjuster: Produces the scale map from item 1 and the clean estimate
        denoiser: Noise predictor with vjp
        sched: Diffusion schedule
        s_base: Global factor on the scale map
        std_lr: Multiplier on the std refinement step (1 is the literal update)
        grid_max: Upper clamp of refined stds
        trace: If given, a StepRecord is appended

    Returns:
        SamplerState at t - 1

    Raises:
        ContractViolation: If t is outside [1, global start] or no item is active
    """
    t = int(state.t)
    if not 1 <= t <= max(1, gset.global_t_start):
        raise ContractViolation(f"guided step at t={t} outside [1, {gset.global_t_start}]")
    if len(state.stds) != len(gset):
        raise ContractViolation(f"state carries {len(state.stds)} stds for {len(gset)} guidance items")
    active = gset.active(t)
    if not np.any(active):
        raise ContractViolation(f"no guidance item is active at t={t}")
    weights = gset.active_weights(t)

    x_t = state.x_t
    eps = denoiser.eps(x_t, t)
    x_prime = reverse_step_mean(x_t, t, eps, sample_noise(state.rng_seed, t, x_t.shape), sched)
    x0 = predict_x0(x_t, t, eps, sched)

    # all active items share one pull-back through the denoiser
    combined = np.zeros_like(x_t)
    residuals = {}
    for i, item in enumerate(gset.items):
        if not active[i]:
            continue
        c, r = measurement_cotangent(x0, item.target, state.stds[i])
        combined += weights[i] * c
        residuals[i] = r
    grad = chain_through_denoiser(combined, x_t, t, denoiser, sched)

    scale = check_scale_map(adjuster.adjust(gset.items[0].y_acute, from_model(x0), t), x_t.shape)
    x_next = x_prime - s_base * scale * grad

    root_ab = sched.sqrt_alpha_bar(t)
    stds = list(state.stds)
    for i, r in residuals.items():
        g = std_derivative_from_residual(x0, r, stds[i])
        if g is None:
            logger.debug(f"std refinement skipped for item {i + 1} at t={t}")
            continue
        stds[i] = clamp_std(stds[i] - std_lr * root_ab * weights[i] * g, grid_max)

    if trace is not None:
        # residuals are in the model domain, twice the unit-range residual
        residual = float(np.mean(residuals[0] ** 2) / 4.0) if 0 in residuals else float("nan")
        trace.append(StepRecord(t=t, residual=residual, stds=tuple(stds), mean_scale=float(np.mean(scale)),
                                active=tuple(bool(a) for a in active)))
    return SamplerState(x_t=x_next, t=t - 1, stds=tuple(stds), rng_seed=state.rng_seed)


def initial_state(gset: GuidanceSet, sched: DiffusionSchedule, seed: int,
                  stds: Optional[Sequence[float]] = None) -> SamplerState:
    """Forward jump of item 1's measurement to its starting step"""
    t_start = max(1, gset.global_t_start)
    target = to_model(gset.items[0].y_acute)
    noise = np.random.default_rng(initial_noise_seed(seed)).standard_normal(target.shape)
    return SamplerState(
        x_t=q_sample(target, t_start, noise, sched),
        t=t_start,
        stds=tuple(stds) if stds is not None else gset.stds,
        rng_seed=int(seed),
    )


def trace_frame(records: Sequence[StepRecord]) -> pd.DataFrame:
    """One row per step: t, residual, std_1..std_n, mean_scale"""
    if not records:
        return pd.DataFrame(columns=["t", "residual", "mean_scale"])
    n = len(records[0].stds)
    rows = [[r.t, r.residual, *r.stds, r.mean_scale] for r in records]
    return pd.DataFrame(rows, columns=["t", "residual", *[f"std_{i + 1}" for i in range(n)], "mean_scale"])


def running_residual(records: Sequence[StepRecord], tail: float = 1.0) -> np.ndarray:
    """Cumulative mean of the item-1 residual over the last `tail` fraction of the steps"""
    if not 0.0 < tail <= 1.0:
        raise ParameterError("tail", f"must be in (0, 1], got {tail}")
    residuals = np.array([r.residual for r in records], dtype=np.float64)
    if residuals.size == 0:
        return residuals
    start = residuals.size - max(1, int(np.ceil(tail * residuals.size)))
    window = residuals[start:]
    return np.cumsum(window) / np.arange(1, window.size + 1)


def descent_violations(records: Sequence[StepRecord], tail: float = 0.25, rtol: float = 0.01) -> int:
    """Steps in the tail where the running residual rises by more than rtol"""
    running = running_residual(records, tail)
    if running.size < 2:
        return 0
    return int(np.sum(running[1:] > running[:-1] * (1.0 + rtol)))


def write_trace(records: Sequence[StepRecord], path: Union[str, Path]) -> Path:
    """Tab-separated trace, one line per step after a `#` header"""
    path = Path(path)
    frame = trace_frame(records)
    with atomic_write(path, "w") as handle:
        handle.write("# " + "\t".join(frame.columns) + "\n")
        frame.to_csv(handle, sep="\t", header=False, index=False, float_format="%.10g")
    return path


def read_trace(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as handle:
        columns = handle.readline().lstrip("#").split()
        return pd.read_csv(handle, sep="\t", header=None, names=columns)


@dataclass(eq=False)
class SamplingResult:
    """Final sample (model domain and unit range) with the refined stds and per-step records"""
    x_model: Image
    stds: tuple
    records: List[StepRecord] = field(default_factory=list)

    @property
    def image(self) -> Image:
        return np.clip(from_model(self.x_model), 0.0, 1.0)

    @property
    def trace(self) -> pd.DataFrame:
        return trace_frame(self.records)


class GuidedSampler:
    """Runs guided_step from the guidance set's starting step down to index 0"""

    def __init__(self, denoiser, sched: DiffusionSchedule, adjuster: BaseScaleAdjuster,
                 s_base: float = 1.0, std_lr: float = 0.02, grid_max: float = 15.0,
                 logger: Optional[Logger] = None):
        self.denoiser = denoiser
        self.sched = sched
        self.adjuster = adjuster
        self.s_base = s_base
        self.std_lr = std_lr
        self.grid_max = grid_max
        self.logger = logger

    def run(self, gset: GuidanceSet, seed: int, x_init: Optional[Image] = None,
            stds: Optional[Sequence[float]] = None) -> SamplingResult:
        """
        Sample one restoration

        Args:
            gset: Guidance set
            seed: Seed of the jump noise and of every step's noise
            x_init: Model-domain start at the global starting step, replacing the forward jump
            stds: Initial stds, replacing the items' own
        """
        state = initial_state(gset, self.sched, seed, stds)
        if x_init is not None:
            state = SamplerState(x_t=np.array(x_init, dtype=np.float64), t=state.t,
                                 stds=state.stds, rng_seed=state.rng_seed)
        records: List[StepRecord] = []
        while state.t >= 1:
            state = guided_step(state, gset, self.adjuster, self.denoiser, self.sched,
                                s_base=self.s_base, std_lr=self.std_lr, grid_max=self.grid_max,
                                trace=records)
            if self.logger is not None:
                last = records[-1]
                self.logger.log_step(last.t, last.residual, last.stds, last.mean_scale)
        logger.debug(f"Guided chain finished with stds {', '.join(f'{s:.3f}' for s in state.stds)}")
        return SamplingResult(x_model=state.x_t, stds=state.stds, records=records)
