"""
End-to-end restoration gain and the learned adjuster's value over constant scales
"""

from typing import Optional

import numpy as np
import pandas as pd

from ..adjusters.training import constant_baseline_losses, evaluate_adjuster_loss, region_scale_means
from ..core.engine import descent_violations
from ..metrics.quality import consistency, psnr
from .common import (
    HARSH_DEGRADATION,
    ExperimentContext,
    baseline_adjuster,
    held_out_steps,
    restore_test_set,
    trained_adjuster,
)


def run_end_to_end(ctx: ExperimentContext) -> pd.DataFrame:
    """
    Per test image: PSNR of the degraded input and of the restoration, measurement
    consistency at the refined item-1 std, and residual-descent violations over
    the last quarter of the chain

    Runs under the corpus-matched prior.
    """
    ctx = ctx.matched()
    results = restore_test_set(ctx, ctx.config, baseline_adjuster(ctx))
    rows = []
    for index, (clean, degraded, result) in enumerate(zip(ctx.test_clean, ctx.test_degraded, results)):
        first = result.guidance.items[0]
        before = psnr(clean, degraded)
        after = psnr(clean, result.image)
        rows.append({"image": index, "std_hat": result.std_hat, "refined_std": result.sampling.stds[0],
                     "psnr_input": before, "psnr_output": after, "psnr_gain": after - before,
                     "consistency": consistency(first.y_acute, result.image, result.sampling.stds[0]),
                     "descent_violations": descent_violations(result.sampling.records)})
    return pd.DataFrame(rows)


def run_end_to_end_harsh(ctx: ExperimentContext) -> pd.DataFrame:
    """run_end_to_end with resampling, heavier noise and compression on top of the blur"""
    return run_end_to_end(ctx.matched().with_degradation(HARSH_DEGRADATION))


def run_dgsa_value(ctx: ExperimentContext, n_steps: Optional[int] = None) -> pd.DataFrame:
    """
    Held-out step-ahead loss of every constant scale and of the trained adjuster

    The trained row also carries the mean scale over flat and textured pixels.
    """
    cfg = ctx.config
    components = ctx.dgsa_components()
    steps = held_out_steps(ctx)
    steps = steps if n_steps is None else steps[:n_steps]
    frame = constant_baseline_losses(steps, components, cfg.gamma, cfg.proxy_weight)
    frame.insert(0, "adjuster", [f"constant({s:g})" for s in frame["scale"]])
    frame["flat_mean"] = np.nan
    frame["textured_mean"] = np.nan

    adjuster = trained_adjuster(ctx)
    regions = region_scale_means(adjuster, steps)
    trained = {
        "adjuster": adjuster.describe(),
        "scale": np.nan,
        "loss": evaluate_adjuster_loss(adjuster, steps, components, cfg.gamma, cfg.proxy_weight),
        "flat_mean": regions.flat,
        "textured_mean": regions.textured,
    }
    return pd.concat([frame, pd.DataFrame([trained])], ignore_index=True)
