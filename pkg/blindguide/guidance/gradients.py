"""
Data-fidelity gradients of the guided sampler

For one guidance item with measurement y (model domain) and kernel k the loss is

    L(x_t, std) = || k_std * x0(x_t) - y ||^2,   x0 = (x_t - s eps(x_t)) / a

with a = sqrt(ab_t) and s = sqrt(1 - ab_t). With residual r = k * x0 - y and
cotangent c = 2 k^T r, the gradient in x_t is (c - s J_eps^T c) / a and the
derivative in std is 2 <dk/dstd * x0, r>.
"""

from typing import Optional, Tuple

import numpy as np

from ..diffusion.schedule import DiffusionSchedule, predict_x0
from ..exceptions import ContractViolation
from ..logging.logger import get_logger
from ..ops.gaussian import (
    DELTA_THRESHOLD,
    convolve,
    convolve_adjoint,
    filter_separable,
    kernel_std_derivative,
    make_kernel,
)
from ..ops.image import Image
from .guidance_set import GuidanceItem, SamplerState

logger = get_logger(__name__)


def _require_active(state: SamplerState, item: GuidanceItem):
    if state.t > item.t_start:
        raise ContractViolation(f"guidance item (std={item.std:.2f}) is inactive at t={state.t} > {item.t_start}")


def measurement_residual(x0: Image, target: Image, std: float) -> np.ndarray:
    """k_std * x0 - target"""
    return convolve(x0, make_kernel(std)) - target


def fidelity_loss(x_t: Image, t: int, target: Image, std: float, denoiser, sched: DiffusionSchedule) -> float:
    """The scalar loss whose x_t-gradient fidelity_gradient returns"""
    x0 = predict_x0(x_t, t, denoiser.eps(x_t, t), sched)
    return float(np.sum(measurement_residual(x0, target, std) ** 2))


def measurement_cotangent(x0: Image, target: Image, std: float) -> Tuple[np.ndarray, np.ndarray]:
    """(c, r) with r the residual and c = 2 k^T r the gradient of the loss in x0"""
    k = make_kernel(std)
    r = convolve(x0, k) - target
    return 2.0 * convolve_adjoint(r, k), r


def chain_through_denoiser(c: np.ndarray, x_t: Image, t: int, denoiser, sched: DiffusionSchedule) -> np.ndarray:
    """Pull an x0-cotangent back to x_t through predict_x0"""
    a = sched.sqrt_alpha_bar(t)
    s = sched.sqrt_one_minus_alpha_bar(t)
    return (c - s * denoiser.vjp(x_t, t, c)) / a


def fidelity_gradient(state: SamplerState, item: GuidanceItem, denoiser, sched: DiffusionSchedule,
                      std: Optional[float] = None, eps: Optional[Image] = None) -> Image:
    """
    Gradient of || k * x0 - y_acute ||^2 with respect to x_t

    Args:
        state: Sampler state at step t
        item: Active guidance item
        denoiser: Noise predictor with vjp
        sched: Diffusion schedule
        std: Kernel std; defaults to the item's std
        eps: Precomputed eps(x_t, t)

    Raises:
        ContractViolation: If the item is not active at state.t
    """
    _require_active(state, item)
    std = item.std if std is None else std
    eps = denoiser.eps(state.x_t, state.t) if eps is None else eps
    x0 = predict_x0(state.x_t, state.t, eps, sched)
    c, _ = measurement_cotangent(x0, item.target, std)
    return chain_through_denoiser(c, state.x_t, state.t, denoiser, sched)


def std_derivative_from_residual(x0: Image, residual: np.ndarray, std: float) -> Optional[float]:
    """2 <dk/dstd * x0, r>; None on the delta branch"""
    if std < DELTA_THRESHOLD:
        return None
    k = make_kernel(std)
    dtaps = kernel_std_derivative(std, k.radius)
    # product rule over the horizontal and vertical passes
    dk_x0 = filter_separable(x0, dtaps, k.taps) + filter_separable(x0, k.taps, dtaps)
    return float(2.0 * np.sum(dk_x0 * residual))


def std_gradient(state: SamplerState, item: GuidanceItem, denoiser, sched: DiffusionSchedule,
                 std: Optional[float] = None, eps: Optional[Image] = None) -> Optional[float]:
    """
    d/dstd of || k_std * x0 - y_acute ||^2 at fixed x_t

    Returns:
        The derivative, or None when std is on the delta branch (refinement skipped)

    Raises:
        ContractViolation: If the item is not active at state.t
    """
    _require_active(state, item)
    std = item.std if std is None else std
    if std < DELTA_THRESHOLD:
        logger.debug(f"std refinement skipped at t={state.t}: std {std:.3f} on the delta branch")
        return None
    eps = denoiser.eps(state.x_t, state.t) if eps is None else eps
    x0 = predict_x0(state.x_t, state.t, eps, sched)
    return std_derivative_from_residual(x0, measurement_residual(x0, item.target, std), std)
