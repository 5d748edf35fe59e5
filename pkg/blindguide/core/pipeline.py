"""
Restoration orchestrator: DBLM, guidance set, guided sampling
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..adjusters.base import AdjusterFactory, BaseScaleAdjuster
from ..config.settings import RunConfig
from ..dblm.mapping import DblmResult, DblmStage
from ..dblm.spectrum import BaseStdEstimator, RadialSpectrum, SpectralStdEstimator
from ..diffusion.gmm import GmmDenoiser, load_prior
from ..diffusion.schedule import DiffusionSchedule, make_schedule
from ..dsst.table import DSSTable
from ..exceptions import BlindGuideError, ConfigurationError, StageError
from ..guidance.guidance_set import GuidanceSet
from ..logging.logger import Logger, get_logger
from ..ops.image import Image
from ..ops.std_search import StdGrid
from ..utils.helpers import derive_seed
from .engine import GuidedSampler, SamplingResult, write_trace

logger = get_logger(__name__)


@dataclass
class RestorationComponents:
    """Everything a restoration reads; shared read-only across images"""
    sched: DiffusionSchedule
    denoiser: Any
    estimator: BaseStdEstimator
    adjuster: BaseScaleAdjuster
    grid: StdGrid
    table: Optional[DSSTable] = None


@dataclass(eq=False)
class RestorationResult:
    image: Image
    dblm: DblmResult
    guidance: GuidanceSet
    sampling: SamplingResult

    @property
    def std_hat(self) -> float:
        return self.dblm.std_hat

    @property
    def refined_stds(self) -> tuple:
        return self.sampling.stds


def required_artifacts(config: RunConfig, need_table: bool = True) -> Dict[str, str]:
    """Artifact files a restoration with this configuration reads"""
    paths = {}
    if config.denoiser == "gmm":
        paths["prior_path"] = config.prior_path
    if config.estimator == "spectral":
        paths["spectrum_path"] = config.spectrum_path
    else:
        paths["sde_path"] = config.sde_path
    if need_table:
        paths["dsst_path"] = config.dsst_path
    if config.adjuster == "dgsa":
        paths["dgsa_path"] = config.dgsa_path
    return paths


def check_artifacts(config: RunConfig, need_table: bool = True):
    """
    Fail fast on missing artifacts

    Raises:
        ConfigurationError: Naming every unset key and missing file
    """
    problems = []
    for key, value in required_artifacts(config, need_table).items():
        if not value:
            problems.append(f"{key} is not set")
        elif not Path(value).exists():
            problems.append(f"{key}: {value} does not exist")
    if problems:
        raise ConfigurationError("Missing restoration artifacts", problems)


def build_adjuster(config: RunConfig, net=None) -> BaseScaleAdjuster:
    factory = AdjusterFactory()
    settings = {
        "type": config.adjuster,
        "scale": config.adjuster_scale,
        "window": config.variance_window,
        "pivot": config.variance_pivot,
        "path": config.dgsa_path,
    }
    if net is not None:
        settings["net"] = net
    return factory.create_adjuster(settings)


def build_estimator(config: RunConfig, grid: StdGrid) -> BaseStdEstimator:
    if config.estimator == "spectral":
        reference = RadialSpectrum.load(config.spectrum_path)
        return SpectralStdEstimator(reference, grid, config.noise_floor, config.wiener_noise_power)
    from ..dblm.sde import TrainedStdEstimator, load_sde
    return TrainedStdEstimator(load_sde(config.sde_path), grid, noise_power=config.wiener_noise_power)


def load_components(config: RunConfig, need_table: bool = True) -> RestorationComponents:
    """
    Load the artifacts named in the configuration

    Args:
        config: Run configuration
        need_table: Whether the DSST table is required (fixed-start runs do without)

    Raises:
        ConfigurationError: If an artifact is missing or inconsistent with the schedule
    """
    check_artifacts(config, need_table)
    sched = make_schedule(config.T, config.beta_start, config.beta_end)
    grid = StdGrid.from_config(config)
    prior = load_prior(config.prior_path)
    table = None
    if need_table:
        table = DSSTable.load(config.dsst_path)
        if table.T != sched.T:
            raise ConfigurationError(f"DSST table {config.dsst_path} was built for T={table.T}, config has T={sched.T}")
    return RestorationComponents(
        sched=sched,
        denoiser=GmmDenoiser(prior, sched),
        estimator=build_estimator(config, grid),
        adjuster=build_adjuster(config),
        grid=grid,
        table=table,
    )


class RestorationPipeline:
    """Restores images with fixed components; safe to share across threads"""

    def __init__(self, config: RunConfig, components: RestorationComponents,
                 logger: Optional[Logger] = None, fixed_t_start: Optional[int] = None,
                 std_override: Optional[float] = None):
        if components.table is None and fixed_t_start is None:
            raise ConfigurationError("a DSST table or a fixed starting step is required")
        self.config = config
        self.components = components
        self.logger = logger
        self.fixed_t_start = fixed_t_start
        self.dblm = DblmStage(components.estimator, config.restorer, config.wiener_noise_power, std_override)
        self.sampler = GuidedSampler(components.denoiser, components.sched, components.adjuster,
                                     s_base=config.s_base, std_lr=config.std_lr,
                                     grid_max=components.grid.maximum)

    def _stage(self, name: str, label: str, func, *args):
        if self.logger is not None:
            self.logger.log_stage_start(name, label)
        try:
            return func(*args)
        except StageError:
            raise
        except BlindGuideError as e:
            raise StageError(name, e) from e
        except (ValueError, ArithmeticError, RuntimeError) as e:
            raise StageError(name, e) from e

    def build_guidance(self, dblm: DblmResult) -> GuidanceSet:
        cfg = self.config
        return GuidanceSet.from_dblm(
            dblm.restored, dblm.std_hat, cfg.n_guidance, cfg.guidance_offsets, cfg.guidance_weights,
            self.components.grid, table=self.components.table, t_start=self.fixed_t_start,
        )

    def restore(self, y: Image, seed: Optional[int] = None, label: str = "") -> RestorationResult:
        """
        Restore one degraded image

        Args:
            y: Degraded unit-range image
            seed: Sampling seed; the configured seed by default
            label: Image name for log events

        Raises:
            StageError: Naming the failing stage
        """
        seed = self.config.seed if seed is None else int(seed)
        start = time.time()
        dblm = self._stage("dblm", label, self.dblm.run, y)
        if self.logger is not None:
            self.logger.log_stage_end("dblm", label, std_hat=f"{dblm.std_hat:.2f}")

        gset = self._stage("guidance", label, self.build_guidance, dblm)
        if self.logger is not None:
            starts = ",".join(str(item.t_start) for item in gset.items)
            self.logger.log_stage_end("guidance", label, n=len(gset), t_starts=starts)

        sampling = self._stage("sampling", label, self.sampler.run, gset, seed)
        if self.logger is not None:
            stds = ",".join(f"{s:.3f}" for s in sampling.stds)
            self.logger.log_stage_end("sampling", label, steps=len(sampling.records), stds=stds,
                                      seconds=f"{time.time() - start:.2f}")
        return RestorationResult(image=sampling.image, dblm=dblm, guidance=gset, sampling=sampling)

    def restore_batch(self, images: Sequence[Image], seed: Optional[int] = None,
                      workers: int = 1, labels: Optional[Sequence[str]] = None) -> List[RestorationResult]:
        """Restore independently with seeds seed + index; results keep the input order"""
        seed = self.config.seed if seed is None else int(seed)
        labels = list(labels) if labels is not None else [str(i) for i in range(len(images))]

        def work(index: int) -> RestorationResult:
            return self.restore(images[index], derive_seed(seed, index), labels[index])

        if workers <= 1:
            return [work(i) for i in range(len(images))]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(work, range(len(images))))


def run_restoration(y: Image, config: RunConfig, components: Optional[RestorationComponents] = None,
                    seed: Optional[int] = None, logger: Optional[Logger] = None) -> Image:
    """
    End-to-end restoration of one image

    Loads the configured artifacts unless components are given. The per-step
    trace is written when the configuration names a trace file.

    Returns:
        Restored image clamped to [0, 1]
    """
    components = components if components is not None else load_components(config)
    result = RestorationPipeline(config, components, logger).restore(y, seed)
    if config.trace_path:
        write_trace(result.sampling.records, config.trace_path)
    return result.image


def restore_all(images: np.ndarray, config: RunConfig, components: RestorationComponents,
                seed: Optional[int] = None, logger: Optional[Logger] = None,
                fixed_t_start: Optional[int] = None) -> np.ndarray:
    """Stack of restorations of (N, H, W, C) inputs"""
    pipeline = RestorationPipeline(config, components, logger, fixed_t_start)
    results = pipeline.restore_batch(list(images), seed, config.workers)
    return np.stack([r.image for r in results])
