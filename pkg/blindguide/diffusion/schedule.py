"""
DDPM coefficient tables and the primitive forward/reverse steps

Timesteps are indexed 0..T-1. A reverse chain runs t = t_start .. 1, each step
producing x_{t-1}; the image left at index 0 is the chain output.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..exceptions import ParameterError
from ..ops.image import Image, check_same_shape


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-timestep coefficients of a linear-beta DDPM"""
    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray

    def check_t(self, t: int, name: str = "t", minimum: int = 0):
        if not (minimum <= int(t) < self.T):
            raise ParameterError(name, f"timestep {t} outside [{minimum}, {self.T - 1}]")

    def sqrt_alpha_bar(self, t: int) -> float:
        return float(np.sqrt(self.alpha_bar[t]))

    def sqrt_one_minus_alpha_bar(self, t: int) -> float:
        return float(np.sqrt(1.0 - self.alpha_bar[t]))


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64)
    values.setflags(write=False)
    return values


def make_schedule(T: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02) -> DiffusionSchedule:
    """
    Linear beta schedule with its derived tables

    beta is interpolated from beta_start to beta_end inclusive; sigma_t = sqrt(beta_t).
    """
    if int(T) != T or T < 2:
        raise ParameterError("T", f"must be an integer >= 2, got {T}")
    if not 0.0 < beta_start < 1.0:
        raise ParameterError("beta_start", f"must lie in (0, 1), got {beta_start}")
    if not 0.0 < beta_end < 1.0:
        raise ParameterError("beta_end", f"must lie in (0, 1), got {beta_end}")
    if beta_start > beta_end:
        raise ParameterError("beta_start", f"must not exceed beta_end ({beta_start} > {beta_end})")

    beta = np.linspace(beta_start, beta_end, int(T), dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return DiffusionSchedule(
        T=int(T),
        beta=_frozen(beta),
        alpha=_frozen(alpha),
        alpha_bar=_frozen(alpha_bar),
        sigma=_frozen(np.sqrt(beta)),
    )


def q_sample(x0: Image, t: int, noise: Image, sched: DiffusionSchedule) -> Image:
    """Forward jump: sqrt(ab_t) x0 + sqrt(1 - ab_t) noise"""
    check_same_shape(x0, noise, "x0 and noise")
    sched.check_t(t)
    return sched.sqrt_alpha_bar(t) * x0 + sched.sqrt_one_minus_alpha_bar(t) * noise


def predict_x0(x_t: Image, t: int, eps: Image, sched: DiffusionSchedule) -> Image:
    """Clean-image estimate from a noisy sample and its predicted noise"""
    check_same_shape(x_t, eps, "x_t and eps")
    sched.check_t(t)
    return (x_t - sched.sqrt_one_minus_alpha_bar(t) * eps) / sched.sqrt_alpha_bar(t)


def reverse_step_mean(x_t: Image, t: int, eps: Image, noise: Image, sched: DiffusionSchedule) -> Image:
    """
    Unguided ancestral step x_t -> x'_{t-1}

    The noise term is dropped on the final step (t == 1).
    """
    check_same_shape(x_t, eps, "x_t and eps")
    check_same_shape(x_t, noise, "x_t and noise")
    sched.check_t(t, minimum=1)
    coef = sched.beta[t] / np.sqrt(1.0 - sched.alpha_bar[t])
    mean = (x_t - coef * eps) / np.sqrt(sched.alpha[t])
    if t == 1:
        return mean
    return mean + sched.sigma[t] * noise


def sample_noise(seed: int, t: int, shape: Sequence[int]) -> np.ndarray:
    """Standard normal noise that depends only on (seed, t)"""
    rng = np.random.default_rng([int(seed), int(t)])
    return rng.standard_normal(tuple(shape))


def initial_noise_seed(seed: int) -> int:
    """Stream used for the forward jump that starts a chain; disjoint from step noise"""
    return int(seed) + 2**31


def ddpm_sample(denoiser, sched: DiffusionSchedule, shape: Sequence[int], seed: int,
                t_start: Optional[int] = None, x_init: Optional[Image] = None) -> Image:
    """
    Unguided DDPM chain from t_start (default T-1) down to index 0

    Starts from pure noise unless x_init is given.
    """
    t_start = sched.T - 1 if t_start is None else int(t_start)
    sched.check_t(t_start, "t_start", minimum=1)
    if x_init is None:
        x = np.random.default_rng(initial_noise_seed(seed)).standard_normal(tuple(shape))
    else:
        x = np.array(x_init, dtype=np.float64)
    for t in range(t_start, 0, -1):
        eps = denoiser.eps(x, t)
        x = reverse_step_mean(x, t, eps, sample_noise(seed, t, x.shape), sched)
    return x
