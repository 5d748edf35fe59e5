"""
Closed-form Gaussian-mixture denoiser

For x0 ~ sum_k w_k N(mu_k, v_k I) and x_t = a x0 + s eps (a = sqrt(ab_t),
s = sqrt(1 - ab_t)), each component gives x_t | k ~ N(a mu_k, c_k I) with
c_k = a^2 v_k + s^2, and posterior mean m_k = (a v_k x_t + s^2 mu_k) / c_k.
E[x0 | x_t] is the responsibility-weighted sum of the m_k, and eps follows by
inverting the forward model.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from sklearn.mixture import GaussianMixture

from ..exceptions import ConfigurationError
from ..logging.logger import get_logger
from ..ops.image import Image, to_model
from ..stores.tensors import read_tensor, write_tensor
from .denoiser import Denoiser
from .schedule import DiffusionSchedule

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.tsv"
WEIGHT_SUM_TOL = 1e-12
PRIOR_KINDS = ("fitted", "exemplar")


@dataclass(frozen=True)
class GmmPrior:
    """Isotropic Gaussian mixture over whole images (model domain)"""
    weights: np.ndarray     # (K,)
    means: np.ndarray       # (K, H, W, C)
    variances: np.ndarray   # (K,)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64).reshape(-1)
        if weights.size == 0:
            raise ConfigurationError("GMM prior has no components")
        if means.ndim != 4 or means.shape[0] != weights.size or variances.size != weights.size:
            raise ConfigurationError(
                f"GMM prior shapes disagree: weights {weights.shape}, means {means.shape}, variances {variances.shape}"
            )
        if np.any(weights <= 0):
            raise ConfigurationError("GMM weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ConfigurationError(f"GMM weights must sum to 1 within {WEIGHT_SUM_TOL}, got {weights.sum()!r}")
        if np.any(variances <= 0):
            raise ConfigurationError("GMM variances must be positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def n_components(self) -> int:
        return int(self.weights.size)

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.means.shape[1:])

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Draw n images from the mixture"""
        rng = np.random.default_rng(seed)
        ks = rng.choice(self.n_components, size=n, p=self.weights)
        noise = rng.standard_normal((n,) + self.image_shape)
        return self.means[ks] + np.sqrt(self.variances[ks])[:, None, None, None] * noise


class GmmDenoiser(Denoiser):
    """Exact posterior-optimal eps for a GmmPrior, with analytic vjp"""

    def __init__(self, prior: GmmPrior, sched: DiffusionSchedule):
        self.prior = prior
        self.sched = sched
        self._means = prior.means.reshape(prior.n_components, -1)
        self._log_w = np.log(prior.weights)

    def _posterior(self, x_t: Image, t: int):
        """Responsibilities and per-component quantities at (x_t, t)"""
        self.sched.check_t(t)
        x = np.asarray(x_t, dtype=np.float64).reshape(-1)
        if x.size != self._means.shape[1]:
            raise ConfigurationError(
                f"image of shape {np.shape(x_t)} does not match prior shape {self.prior.image_shape}"
            )
        ab = self.sched.alpha_bar[t]
        a = np.sqrt(ab)
        s2 = 1.0 - ab
        c = ab * self.prior.variances + s2                      # (K,)
        diff = x[None, :] - a * self._means                     # (K, D)
        sq = np.einsum("kd,kd->k", diff, diff)
        d = x.size
        log_p = self._log_w - 0.5 * d * np.log(2.0 * np.pi * c) - sq / (2.0 * c)
        r = np.exp(log_p - logsumexp(log_p))
        gain = a * self.prior.variances / c                     # dm_k/dx
        m = self._means + gain[:, None] * diff                  # (K, D)
        return x, a, s2, c, diff, r, gain, m

    def posterior_mean(self, x_t: Image, t: int) -> Image:
        """E[x0 | x_t]"""
        _, _, _, _, _, r, _, m = self._posterior(x_t, t)
        return (r @ m).reshape(np.shape(x_t))

    def eps(self, x_t: Image, t: int) -> Image:
        x, a, s2, _, _, r, _, m = self._posterior(x_t, t)
        mean = r @ m
        return ((x - a * mean) / np.sqrt(s2)).reshape(np.shape(x_t))

    def vjp(self, x_t: Image, t: int, cotangent: Image) -> Image:
        x, a, s2, c, diff, r, gain, m = self._posterior(x_t, t)
        u = np.asarray(cotangent, dtype=np.float64).reshape(-1)
        if u.size != x.size:
            raise ConfigurationError("cotangent shape does not match x_t")
        # grad_x log r_k = g_k - sum_j r_j g_j with g_k = -(x - a mu_k) / c_k
        g = -diff / c[:, None]
        g_bar = r @ g
        proj = m @ u                                            # <m_k, u>
        jt_u = float(r @ gain) * u + (r * proj) @ (g - g_bar[None, :])
        return ((u - a * jt_u) / np.sqrt(s2)).reshape(np.shape(x_t))


def gmm_eps(prior: GmmPrior, x_t: Image, t: int, sched: DiffusionSchedule) -> Image:
    return GmmDenoiser(prior, sched).eps(x_t, t)


def gmm_vjp(prior: GmmPrior, x_t: Image, t: int, cotangent: Image, sched: DiffusionSchedule) -> Image:
    return GmmDenoiser(prior, sched).vjp(x_t, t, cotangent)


def fit_gmm_prior(corpus: np.ndarray, n_components: int = 8, seed: int = 0) -> GmmPrior:
    """
    Fit a spherical GMM to a unit-range corpus of shape (N, H, W, C)

    The fit happens in the model domain, where the diffusion runs.
    """
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.ndim != 4 or corpus.shape[0] == 0:
        raise ConfigurationError(f"corpus must have shape (N, H, W, C) with N >= 1, got {corpus.shape}")
    n = corpus.shape[0]
    k = max(1, min(int(n_components), n))
    data = to_model(corpus).reshape(n, -1)
    if n == 1:
        return GmmPrior(np.ones(1), data.reshape((1,) + corpus.shape[1:]), np.array([1e-3]))
    model = GaussianMixture(n_components=k, covariance_type="spherical", reg_covar=1e-6, random_state=seed)
    model.fit(data)
    weights = np.maximum(model.weights_, 1e-12)
    logger.info(f"Fitted GMM prior: components={k}, images={n}, mean var={float(np.mean(model.covariances_)):.4g}")
    return GmmPrior(
        weights=weights / weights.sum(),
        means=model.means_.reshape((k,) + corpus.shape[1:]),
        variances=np.asarray(model.covariances_, dtype=np.float64),
    )


def exemplar_prior(corpus: np.ndarray, variance: float = 1e-3) -> GmmPrior:
    """
    One equally weighted component per corpus image, all with the same variance

    Images drawn from this prior are corpus images plus white noise of the given
    model-domain variance, so the denoiser is exact for them.
    """
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.ndim != 4 or corpus.shape[0] == 0:
        raise ConfigurationError(f"corpus must have shape (N, H, W, C) with N >= 1, got {corpus.shape}")
    if not variance > 0:
        raise ConfigurationError(f"exemplar variance must be positive, got {variance}")
    n = corpus.shape[0]
    weights = np.full(n, 1.0 / n)
    logger.info(f"Exemplar GMM prior: components={n}, var={variance:.4g}")
    return GmmPrior(weights=weights / weights.sum(), means=to_model(corpus), variances=np.full(n, float(variance)))


def make_prior(corpus: np.ndarray, kind: str = "fitted", n_components: int = 8, variance: float = 1e-3,
               seed: int = 0) -> GmmPrior:
    """Prior of the configured kind: a fitted spherical mixture or the exemplar mixture"""
    if kind == "fitted":
        return fit_gmm_prior(corpus, n_components, seed)
    if kind == "exemplar":
        return exemplar_prior(corpus, variance)
    raise ConfigurationError(f"Unsupported prior kind: {kind} (expected one of {', '.join(PRIOR_KINDS)})")


def save_prior(prior: GmmPrior, directory: Union[str, Path]) -> Path:
    """Write mean images as raw tensors plus a weight/var/file manifest"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(prior.n_components):
        name = f"mean_{k:03d}.bgt"
        write_tensor(directory / name, prior.means[k])
        rows.append((repr(float(prior.weights[k])), repr(float(prior.variances[k])), name))
    manifest = pd.DataFrame(rows, columns=["weight", "var", "mean_file"])
    manifest.to_csv(directory / MANIFEST_NAME, sep="\t", header=False, index=False)
    return directory


def load_prior(directory: Union[str, Path]) -> GmmPrior:
    """Inverse of save_prior"""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise ConfigurationError(f"GMM prior manifest not found: {manifest_path}")
    manifest = pd.read_csv(manifest_path, sep="\t", header=None, names=["weight", "var", "mean_file"])
    if manifest.empty:
        raise ConfigurationError(f"GMM prior manifest is empty: {manifest_path}")
    means = np.stack([read_tensor(directory / name) for name in manifest["mean_file"]])
    return GmmPrior(
        weights=manifest["weight"].to_numpy(dtype=np.float64),
        means=means,
        variances=manifest["var"].to_numpy(dtype=np.float64),
    )
