"""
Kernel-refinement experiment: a measurement blurred at a known std, guided
from a wrong initial std, with and without on-line refinement
"""

from typing import Optional, Sequence

import pandas as pd

from ..core.engine import GuidedSampler
from ..guidance.guidance_set import GuidanceItem, GuidanceSet
from ..metrics.quality import psnr
from ..ops.gaussian import blur
from ..utils.helpers import derive_seed
from .common import ExperimentContext, baseline_adjuster


def run_kernel_refinement(ctx: ExperimentContext, true_std: float = 3.0,
                          initial_stds: Sequence[float] = (2.0, 4.0),
                          n_images: Optional[int] = None) -> pd.DataFrame:
    """
    Rows per (image, initial std, mode) with the final std and the output PSNR

    The frozen mode keeps the initial std for the whole chain.
    """
    ctx = ctx.matched()
    config = ctx.config
    adjuster = baseline_adjuster(ctx)
    images = ctx.test_clean if n_images is None else ctx.test_clean[:n_images]
    modes = (("refined", config.std_lr), ("frozen", 0.0))
    rows = []
    for index, clean in enumerate(images):
        measurement = blur(clean, true_std)
        seed = derive_seed(config.seed, index)
        for initial in initial_stds:
            t_start = max(1, ctx.table.lookup(initial).t_start)
            gset = GuidanceSet((GuidanceItem(y_acute=measurement, std=float(initial), weight=1.0, t_start=t_start),))
            for mode, std_lr in modes:
                sampler = GuidedSampler(ctx.denoiser, ctx.sched, adjuster, s_base=config.s_base,
                                        std_lr=std_lr, grid_max=ctx.grid.maximum)
                result = sampler.run(gset, seed)
                rows.append({"image": index, "initial_std": float(initial), "mode": mode,
                             "final_std": result.stds[0], "psnr": psnr(clean, result.image)})
    return pd.DataFrame(rows)


def summarize_refinement(frame: pd.DataFrame, true_std: float = 3.0) -> pd.DataFrame:
    """Per initial std: mean refined std, its error and the PSNR gain over the frozen run"""
    pivot = frame.pivot_table(index=["image", "initial_std"], columns="mode", values=["final_std", "psnr"])
    summary = pd.DataFrame({
        "refined_std": pivot[("final_std", "refined")],
        "psnr_gain": pivot[("psnr", "refined")] - pivot[("psnr", "frozen")],
    }).groupby(level="initial_std").mean()
    summary["std_error"] = (summary["refined_std"] - true_std).abs()
    return summary.reset_index()
