"""
Shared setup of the desk-scale experiments

A context holds a synthetic training corpus with every artifact fitted to it
(GMM prior, reference spectrum, starting-step table) and a held-out set of
degraded test images.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..adjusters.base import BaseScaleAdjuster
from ..adjusters.network import DgsaAdjuster, load_dgsa
from ..adjusters.training import DgsaComponents, TrainingProbe, make_validation_probes, train_dgsa
from ..config.settings import RunConfig
from ..core.pipeline import RestorationComponents, RestorationPipeline, RestorationResult, build_adjuster
from ..data.synth import synth_corpus
from ..dblm.mapping import DblmStage
from ..dblm.spectrum import RadialSpectrum, SpectralStdEstimator
from ..degradations.pipeline import DegradationParams, degrade_corpus
from ..diffusion.gmm import GmmDenoiser, GmmPrior, exemplar_prior, make_prior
from ..diffusion.schedule import DiffusionSchedule, make_schedule
from ..dsst.table import DSSTable, build_table
from ..logging.logger import Logger, get_logger
from ..metrics.quality import consistency, psnr, sharpness, ssim
from ..ops.image import from_model
from ..ops.std_search import StdGrid
from ..utils.helpers import atomic_write

logger = get_logger(__name__)

# held-out images come from a disjoint generator stream
TEST_SEED_OFFSET = 1_000_003
# blur plus small noise; HARSH_DEGRADATION adds resampling, heavier noise and compression
TEST_DEGRADATION = DegradationParams(sigma=3.0, C=1.0, zeta=1.0, delta=100)
HARSH_DEGRADATION = DegradationParams(sigma=3.0, C=2.0, zeta=5.0, delta=80)


@dataclass(eq=False)
class ExperimentContext:
    config: RunConfig
    sched: DiffusionSchedule
    prior: GmmPrior
    denoiser: GmmDenoiser
    grid: StdGrid
    spectrum: RadialSpectrum
    table: DSSTable
    corpus: np.ndarray
    test_clean: np.ndarray
    test_degraded: np.ndarray
    degradation: DegradationParams = TEST_DEGRADATION
    seed: int = 0
    logger: Optional[Logger] = None
    cache: Dict[str, Any] = field(default_factory=dict)

    @property
    def estimator(self) -> SpectralStdEstimator:
        return SpectralStdEstimator(self.spectrum, self.grid, self.config.noise_floor,
                                    self.config.wiener_noise_power)

    def components(self, adjuster: BaseScaleAdjuster) -> RestorationComponents:
        return RestorationComponents(sched=self.sched, denoiser=self.denoiser, estimator=self.estimator,
                                     adjuster=adjuster, grid=self.grid, table=self.table)

    def dgsa_components(self) -> DgsaComponents:
        dblm = DblmStage(self.estimator, self.config.restorer, self.config.wiener_noise_power)
        return DgsaComponents(denoiser=self.denoiser, sched=self.sched, table=self.table, dblm=dblm,
                              s_base=self.config.s_base, compression_step=self.config.compression_step)

    def matched(self) -> "ExperimentContext":
        """
        The same corpus, schedule and table under the exemplar prior, with held-out
        images drawn from that prior
        """
        if self.config.prior_kind == "exemplar":
            return self
        if "matched" not in self.cache:
            config = self.config.with_overrides(prior_kind="exemplar")
            prior = exemplar_prior(self.corpus, config.exemplar_variance)
            test_clean = held_out_images(prior, len(self.test_clean), self.seed + TEST_SEED_OFFSET)
            self.cache["matched"] = replace(
                self,
                config=config,
                prior=prior,
                denoiser=GmmDenoiser(prior, self.sched),
                test_clean=test_clean,
                test_degraded=degrade_corpus(test_clean, self.degradation, self.seed, config.compression_step),
                cache={},
            )
        return self.cache["matched"]

    def with_degradation(self, degradation: DegradationParams) -> "ExperimentContext":
        """The same clean test images under another degradation"""
        if degradation == self.degradation:
            return self
        degraded = degrade_corpus(self.test_clean, degradation, self.seed, self.config.compression_step)
        return replace(self, test_degraded=degraded, degradation=degradation, cache={})


def held_out_images(prior: GmmPrior, n: int, seed: int) -> np.ndarray:
    """n unit-range draws from a prior"""
    return np.clip(from_model(prior.sample(n, seed)), 0.0, 1.0)


def prepare_context(config: RunConfig, n_test: int = 4, seed: Optional[int] = None,
                    degradation: DegradationParams = TEST_DEGRADATION,
                    logger: Optional[Logger] = None) -> ExperimentContext:
    """
    Synthesise the corpus and fit every artifact in memory

    Held-out images come from a disjoint generator stream, or from the prior
    itself when it is the exemplar prior.
    """
    seed = config.seed if seed is None else int(seed)
    corpus = synth_corpus(config.corpus_size, config.image_size, seed, config.channels, config.corpus_grain)
    sched = make_schedule(config.T, config.beta_start, config.beta_end)
    prior = make_prior(corpus, config.prior_kind, config.gmm_components, config.exemplar_variance, seed)
    if config.prior_kind == "exemplar":
        test_clean = held_out_images(prior, n_test, seed + TEST_SEED_OFFSET)
    else:
        test_clean = synth_corpus(n_test, config.image_size, seed + TEST_SEED_OFFSET, config.channels,
                                  config.corpus_grain)
    grid = StdGrid.from_config(config)
    table = build_table(corpus, grid, config.tol, sched, workers=config.workers)
    test_degraded = degrade_corpus(test_clean, degradation, seed, config.compression_step)
    return ExperimentContext(
        config=config,
        sched=sched,
        prior=prior,
        denoiser=GmmDenoiser(prior, sched),
        grid=grid,
        spectrum=RadialSpectrum.from_corpus(corpus),
        table=table,
        corpus=corpus,
        test_clean=test_clean,
        test_degraded=test_degraded,
        degradation=degradation,
        seed=seed,
        logger=logger,
    )


def held_out_steps(ctx: ExperimentContext) -> List[TrainingProbe]:
    """Fixed guided-step instances over the held-out clean images"""
    if "held_out_steps" not in ctx.cache:
        ctx.cache["held_out_steps"] = make_validation_probes(ctx.test_clean, ctx.dgsa_components(),
                                                            seed=ctx.config.seed + TEST_SEED_OFFSET)
    return ctx.cache["held_out_steps"]


def trained_adjuster(ctx: ExperimentContext) -> DgsaAdjuster:
    """
    DGSA adjuster from config.dgsa_path, or trained on the context corpus once

    Training starts from the best constant scale on the held-out steps and keeps
    the checkpoint with the lowest held-out loss.
    """
    if "dgsa" not in ctx.cache:
        cfg = ctx.config
        if cfg.dgsa_path and Path(cfg.dgsa_path).exists():
            net = load_dgsa(cfg.dgsa_path)
        else:
            result = train_dgsa(ctx.corpus, ctx.dgsa_components(), cfg.stage1_iters, cfg.stage2_iters,
                                gamma=cfg.gamma, proxy_weight=cfg.proxy_weight,
                                learning_rate=cfg.learning_rate, momentum=cfg.momentum,
                                batch_size=cfg.batch_size, seed=cfg.seed, progress=ctx.logger,
                                validation=held_out_steps(ctx))
            net = result.net
        ctx.cache["dgsa"] = DgsaAdjuster(net)
    return ctx.cache["dgsa"]


def baseline_adjuster(ctx: ExperimentContext) -> BaseScaleAdjuster:
    """The configured non-learned adjuster"""
    config = ctx.config
    if config.adjuster == "dgsa":
        config = config.with_overrides(adjuster="constant")
    return build_adjuster(config)


def restore_test_set(ctx: ExperimentContext, config: RunConfig, adjuster: BaseScaleAdjuster,
                     fixed_t_start: Optional[int] = None) -> List[RestorationResult]:
    pipeline = RestorationPipeline(config, ctx.components(adjuster), ctx.logger, fixed_t_start)
    return pipeline.restore_batch(list(ctx.test_degraded), config.seed, config.workers)


def score_results(ctx: ExperimentContext, results: List[RestorationResult]) -> Dict[str, float]:
    """Mean metrics over the test set; consistency is against the first guidance item at its refined std"""
    rows = []
    for clean, result in zip(ctx.test_clean, results):
        first = result.guidance.items[0]
        rows.append({
            "psnr": psnr(clean, result.image),
            "ssim": ssim(clean, result.image),
            "sharpness": sharpness(result.image),
            "consistency": consistency(first.y_acute, result.image, result.sampling.stds[0]),
        })
    return pd.DataFrame(rows).mean().to_dict()


def single_guidance(config: RunConfig) -> RunConfig:
    return config.with_overrides(n_guidance=1, lambda_weights=[1.0], std_offsets=[0.0])


def write_report(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """CSV with a header row, written atomically"""
    path = Path(path)
    with atomic_write(path, "w") as handle:
        frame.to_csv(handle, index=False, float_format="%.6g")
    logger.info(f"Wrote report: {path} ({len(frame)} rows)")
    return path
