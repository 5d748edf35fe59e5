"""
DDPM schedule and noise-prediction models
"""

from .schedule import DiffusionSchedule, make_schedule, q_sample, predict_x0, reverse_step_mean, ddpm_sample
from .denoiser import Denoiser, FiniteDifferenceDenoiser, finite_diff_vjp
from .gmm import (
    GmmPrior, GmmDenoiser, gmm_eps, gmm_vjp, fit_gmm_prior, exemplar_prior, make_prior, save_prior, load_prior,
)

__all__ = [
    "DiffusionSchedule", "make_schedule", "q_sample", "predict_x0", "reverse_step_mean", "ddpm_sample",
    "Denoiser", "FiniteDifferenceDenoiser", "finite_diff_vjp",
    "GmmPrior", "GmmDenoiser", "gmm_eps", "gmm_vjp", "fit_gmm_prior", "exemplar_prior", "make_prior",
    "save_prior", "load_prior",
]
