"""
Command Line Interface for blindguide
"""

import sys
import time
import traceback
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import click
import numpy as np
import pandas as pd

from .config.settings import RunConfig, load_config
from .exceptions import BlindGuideError, StageError, TrainingDiverged
from .logging.logger import Logger
from .stores.base import StoreFactory
from .stores.filesystem import load_image, save_image
from .utils.helpers import derive_seed, format_duration

IMAGE_SUFFIXES = (".png", ".bgt")


class Session:
    """Configuration and logger shared by one CLI invocation"""

    def __init__(self, config_path: Optional[str], log_level: Optional[str], log_dir: Optional[str]):
        self.config_path = config_path
        self.log_level = log_level
        self.log_dir = log_dir
        self._config: Optional[RunConfig] = None
        self._logger: Optional[Logger] = None

    @property
    def config(self) -> RunConfig:
        if self._config is None:
            self._config = load_config(self.config_path)
        return self._config

    def override(self, **values):
        self._config = self.config.with_overrides(**values)

    @property
    def logger(self) -> Logger:
        if self._logger is None:
            level = self.log_level or self.config.log_level
            log_dir = self.log_dir if self.log_dir is not None else self.config.log_dir
            self._logger = Logger(log_level=level, log_dir=log_dir or None)
        return self._logger


def _run(session: Session, command: str, body: Callable[[], None]):
    """Run a command body, mapping errors to a `stage: message` line and exit code 1"""
    start = time.time()
    try:
        logger = session.logger
        logger.log_run_start(command, {"config": session.config_path or "<defaults>"})
        body()
        logger.log_run_end(command, True, time.time() - start)
        logger.info(f"{command} finished in {format_duration(time.time() - start)}")
    except StageError as e:
        click.echo(f"{e.stage}: {e.cause}", err=True)
        sys.exit(1)
    except BlindGuideError as e:
        click.echo(f"{command}: {e}", err=True)
        sys.exit(1)
    except click.ClickException:
        raise
    except KeyboardInterrupt:
        click.echo("\nInterrupted by user", err=True)
        sys.exit(130)
    except Exception as e:
        click.echo(f"Fatal error: {str(e)}", err=True)
        traceback.print_exc()
        sys.exit(1)


def _image_files(path: Path) -> List[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    return [path]


def _read_corpus(path: str) -> np.ndarray:
    store = StoreFactory().create_store(path)
    return store.read_all()


def _output_path(out: Path, source: Path, batch: bool) -> Path:
    return out / source.name if batch else out


@click.group()
@click.option("--config", "-c", "config_path",
              type=click.Path(exists=True, file_okay=True, dir_okay=False, readable=True),
              help="Run configuration (.cfg key = value or .yaml)")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Console logging level (defaults to the configuration)")
@click.option("--log-dir", default=None, help="Directory for log files; empty to disable file logging")
@click.version_option(version="1.0.0", prog_name="blindguide")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str], log_level: Optional[str], log_dir: Optional[str]):
    """
    blindguide - blind image restoration by guided diffusion

    Maps degraded images to Gaussian-blurred surrogates and restores them with
    guided diffusion sampling.
    """
    ctx.obj = Session(config_path, log_level, log_dir)


@main.command()
@click.option("--n", "count", type=int, default=None, help="Number of images (defaults to corpus_size)")
@click.option("--size", type=click.Choice(["16", "32", "64"]), default=None, help="Image side length")
@click.option("--seed", type=int, default=None)
@click.option("--format", "image_format", type=click.Choice(["png", "bgt"]), default="png")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory")
@click.pass_obj
def synth(session: Session, count: Optional[int], size: Optional[str], seed: Optional[int],
          image_format: str, out: str):
    """Generate the procedural toy corpus"""
    def body():
        from .data.synth import synth_corpus
        session.override(seed=seed, corpus_size=count, image_size=int(size) if size else None)
        cfg = session.config
        corpus = synth_corpus(cfg.corpus_size, cfg.image_size, cfg.seed, cfg.channels, cfg.corpus_grain)
        store = StoreFactory(session.logger).create_store(out, image_format)
        for index, image in enumerate(corpus):
            store.write_image(f"img_{index:04d}", image)
        session.logger.info(f"Wrote {len(corpus)} images to {out}")
    _run(session, "synth", body)


@main.command()
@click.option("--in", "source", required=True, type=click.Path(exists=True), help="Image or directory")
@click.option("--out", required=True, type=click.Path(), help="Output image or directory")
@click.option("--sigma", type=float, default=None, help="Blur std")
@click.option("--scale", "factor", type=float, default=None, help="Downsampling factor C")
@click.option("--noise", "zeta", type=float, default=None, help="Noise level on the 0-255 scale")
@click.option("--quality", "delta", type=int, default=None, help="Compression quality")
@click.option("--random", "randomise", is_flag=True, help="Draw parameters per image over the full ranges")
@click.option("--seed", type=int, default=None)
@click.pass_obj
def degrade(session: Session, source: str, out: str, sigma, factor, zeta, delta, randomise: bool,
            seed: Optional[int]):
    """Apply the synthetic degradation pipeline"""
    def body():
        from .degradations.pipeline import DegradationParams, degrade as degrade_image
        session.override(seed=seed)
        cfg = session.config
        given = {k: v for k, v in {"sigma": sigma, "C": factor, "zeta": zeta, "delta": delta}.items() if v is not None}
        fixed = None if randomise else DegradationParams(**given)
        rng = np.random.default_rng(cfg.seed)
        files = _image_files(Path(source))
        batch = Path(source).is_dir()
        for index, file in enumerate(files):
            params = fixed if fixed is not None else DegradationParams.sample(rng)
            image = degrade_image(load_image(file), params, derive_seed(cfg.seed, index), cfg.compression_step)
            save_image(_output_path(Path(out), file, batch), image)
            session.logger.debug(f"Degraded {file.name}", params.to_dict())
        session.logger.info(f"Degraded {len(files)} images into {out}")
    _run(session, "degrade", body)


@main.command("fit-prior")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Directory for the prior")
@click.option("--spectrum", "spectrum_out", type=click.Path(dir_okay=False), default=None,
              help="Reference spectrum file (defaults to <out>/spectrum.tsv)")
@click.pass_obj
def fit_prior(session: Session, corpus: str, out: str, spectrum_out: Optional[str]):
    """Fit the GMM prior and the reference spectrum to a clean corpus"""
    def body():
        from .dblm.spectrum import RadialSpectrum
        from .diffusion.gmm import make_prior, save_prior
        cfg = session.config
        images = _read_corpus(corpus)
        prior = make_prior(images, cfg.prior_kind, cfg.gmm_components, cfg.exemplar_variance, cfg.seed)
        save_prior(prior, out)
        spectrum_path = spectrum_out or str(Path(out) / "spectrum.tsv")
        RadialSpectrum.from_corpus(images).save(spectrum_path)
        session.logger.info(f"Prior written to {out}, spectrum to {spectrum_path}",
                            {"components": prior.n_components, "images": len(images)})
    _run(session, "fit-prior", body)


@main.command("build-dsst")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Table file")
@click.pass_obj
def build_dsst(session: Session, corpus: str, out: str):
    """Build the starting-step table from a clean corpus"""
    def body():
        from .diffusion.schedule import make_schedule
        from .dsst.table import build_table
        from .ops.std_search import StdGrid
        cfg = session.config
        sched = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end)
        table = build_table(_read_corpus(corpus), StdGrid.from_config(cfg), cfg.tol, sched, cfg.workers)
        table.save(out)
        session.logger.info(f"DSST table written to {out}", {"entries": len(table)})
    _run(session, "build-dsst", body)


@main.command("estimate-std")
@click.option("--in", "source", required=True, type=click.Path(exists=True), help="Image or directory")
@click.option("--spectrum", default=None, type=click.Path(dir_okay=False), help="Overrides spectrum_path")
@click.pass_obj
def estimate_std_command(session: Session, source: str, spectrum: Optional[str]):
    """Print the estimated blur std of each image"""
    def body():
        from .core.pipeline import build_estimator
        from .exceptions import ConfigurationError
        from .ops.std_search import StdGrid
        session.override(spectrum_path=spectrum)
        cfg = session.config
        key = "spectrum_path" if cfg.estimator == "spectral" else "sde_path"
        if not getattr(cfg, key):
            raise ConfigurationError(f"{key} is not set")
        estimator = build_estimator(cfg, StdGrid.from_config(cfg))
        for file in _image_files(Path(source)):
            click.echo(f"{file.name}\t{estimator.estimate(load_image(file)).std_hat:.2f}")
    _run(session, "estimate-std", body)


@main.command()
@click.option("--in", "source", required=True, type=click.Path(exists=True), help="Image or directory")
@click.option("--out", required=True, type=click.Path(), help="Output image or directory")
@click.option("--seed", type=int, default=None)
@click.option("--n-guidance", type=int, default=None)
@click.option("--table", default=None, help="Overrides dsst_path")
@click.option("--prior", default=None, help="Overrides prior_path")
@click.option("--spectrum", default=None, help="Overrides spectrum_path")
@click.option("--trace", default=None, help="Per-step trace file (single image)")
@click.pass_obj
def restore(session: Session, source: str, out: str, seed: Optional[int], n_guidance: Optional[int],
            table: Optional[str], prior: Optional[str], spectrum: Optional[str], trace: Optional[str]):
    """Restore one image or every image of a directory"""
    def body():
        from .core.engine import write_trace
        from .core.pipeline import RestorationPipeline, load_components
        session.override(seed=seed, n_guidance=n_guidance, dsst_path=table, prior_path=prior,
                         spectrum_path=spectrum, trace_path=trace)
        cfg = session.config
        pipeline = RestorationPipeline(cfg, load_components(cfg), session.logger)
        files = _image_files(Path(source))
        batch = Path(source).is_dir()
        images = [load_image(f) for f in files]
        results = pipeline.restore_batch(images, cfg.seed, cfg.workers, [f.name for f in files])
        for file, result in zip(files, results):
            save_image(_output_path(Path(out), file, batch), result.image)
        if cfg.trace_path and len(results) == 1:
            write_trace(results[0].sampling.records, cfg.trace_path)
        session.logger.info(f"Restored {len(results)} images into {out}")
    _run(session, "restore", body)


@main.command("train-dgsa")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Weights directory")
@click.option("--stage1-iters", type=int, default=None)
@click.option("--stage2-iters", type=int, default=None)
@click.pass_obj
def train_dgsa_command(session: Session, corpus: str, out: str, stage1_iters: Optional[int],
                       stage2_iters: Optional[int]):
    """Train the scale adjuster (exact blurs, then DBLM outputs)"""
    def body():
        from .adjusters.network import save_dgsa
        from .adjusters.training import DgsaComponents, train_dgsa
        from .core.pipeline import load_components
        from .dblm.mapping import DblmStage
        from .experiments.common import write_report
        session.override(stage1_iters=stage1_iters, stage2_iters=stage2_iters)
        cfg = session.config
        parts = load_components(cfg.with_overrides(adjuster="constant"))
        dblm = DblmStage(parts.estimator, cfg.restorer, cfg.wiener_noise_power)
        components = DgsaComponents(denoiser=parts.denoiser, sched=parts.sched, table=parts.table, dblm=dblm,
                                    s_base=cfg.s_base, compression_step=cfg.compression_step)
        result = train_dgsa(_read_corpus(corpus), components, cfg.stage1_iters, cfg.stage2_iters,
                            gamma=cfg.gamma, proxy_weight=cfg.proxy_weight, learning_rate=cfg.learning_rate,
                            momentum=cfg.momentum, batch_size=cfg.batch_size, seed=cfg.seed,
                            progress=session.logger)
        save_dgsa(result.net, out)
        write_report(result.curve, Path(out) / "curve.csv")
        if result.diverged:
            raise TrainingDiverged(result.diverged_at, checkpoint=out)
    _run(session, "train-dgsa", body)


@main.command("train-sde")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Weights directory")
@click.option("--iters", type=int, default=None)
@click.pass_obj
def train_sde_command(session: Session, corpus: str, out: str, iters: Optional[int]):
    """Train the convolutional blur-level regressor"""
    def body():
        from .dblm.sde import save_sde, train_sde
        from .experiments.common import write_report
        from .ops.std_search import StdGrid
        session.override(sde_iters=iters)
        cfg = session.config
        result = train_sde(_read_corpus(corpus), StdGrid.from_config(cfg), cfg.sde_iters, cfg.sde_width,
                           cfg.batch_size, cfg.learning_rate, cfg.gamma_std, cfg.seed, session.logger)
        save_sde(result.net, out)
        write_report(result.curve, Path(out) / "curve.csv")
        click.echo(f"val_mae\t{result.val_mae:.4f}\nval_spearman\t{result.val_spearman:.4f}")
    _run(session, "train-sde", body)


@main.command("eval")
@click.option("--reference", required=True, type=click.Path(exists=True), help="Clean image or directory")
@click.option("--restored", required=True, type=click.Path(exists=True), help="Image or directory to score")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="CSV report")
@click.pass_obj
def evaluate(session: Session, reference: str, restored: str, out: Optional[str]):
    """MetricReport table of restored images against their references"""
    def body():
        from .experiments.common import write_report
        from .metrics.quality import evaluate_pair
        pairs = _pair_files(Path(reference), Path(restored))
        rows = [{"image": ref.name, **evaluate_pair(load_image(ref), load_image(img)).to_dict()}
                for ref, img in pairs]
        frame = pd.DataFrame(rows).drop(columns=["consistency"])
        if out:
            write_report(frame, out)
        click.echo(frame.to_csv(sep="\t", index=False, float_format="%.4f"), nl=False)
    _run(session, "eval", body)


def _pair_files(reference: Path, restored: Path) -> List[Tuple[Path, Path]]:
    if not reference.is_dir():
        return [(reference, restored)]
    pairs = []
    for ref in _image_files(reference):
        candidate = restored / ref.name
        if not candidate.exists():
            raise click.UsageError(f"no restored image for {ref.name} in {restored}")
        pairs.append((ref, candidate))
    return pairs


@main.command()
@click.option("--suite", required=True,
              type=click.Choice(["mapping", "tab3", "guidance-count", "start-step", "kernel-refinement",
                                 "end-to-end", "end-to-end-harsh", "dgsa-value"]),
              help="Suite name; tab3 is the mapping ablation")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="CSV report")
@click.option("--n-test", type=int, default=4, help="Held-out test images")
@click.option("--seed", type=int, default=None)
@click.pass_obj
def ablate(session: Session, suite: str, out: str, n_test: int, seed: Optional[int]):
    """Run a desk-scale experiment suite and write its CSV"""
    def body():
        from .experiments import prepare_context, run_suite, write_report
        session.override(seed=seed)
        ctx = prepare_context(session.config, n_test=n_test, logger=session.logger)
        frame = run_suite(suite, ctx)
        write_report(frame, out)
        click.echo(frame.to_csv(sep="\t", index=False, float_format="%.4f"), nl=False)
    _run(session, "ablate", body)


if __name__ == "__main__":
    main()
