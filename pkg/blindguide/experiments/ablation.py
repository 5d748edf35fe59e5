"""
Component ablation and starting-step sweep
"""

from dataclasses import dataclass

import pandas as pd

from .common import (
    ExperimentContext,
    baseline_adjuster,
    restore_test_set,
    score_results,
    single_guidance,
    trained_adjuster,
)


@dataclass(frozen=True)
class Setting:
    description: str
    multi_guidance: bool
    dsst: bool
    dgsa: bool


# every setting maps with DBLM; the rest is switched on per row
SETTINGS = {
    "A": Setting("DBLM", multi_guidance=False, dsst=False, dgsa=False),
    "B": Setting("DBLM + multi-guidance", multi_guidance=True, dsst=False, dgsa=False),
    "C": Setting("DBLM + multi-guidance + DSST", multi_guidance=True, dsst=True, dgsa=False),
    "D": Setting("DBLM + multi-guidance + DGSA", multi_guidance=True, dsst=False, dgsa=True),
    "E": Setting("DBLM + DSST + DGSA", multi_guidance=False, dsst=True, dgsa=True),
    "F": Setting("DBLM + multi-guidance + DSST + DGSA", multi_guidance=True, dsst=True, dgsa=True),
}


def run_mapping_ablation(ctx: ExperimentContext, settings=tuple(SETTINGS)) -> pd.DataFrame:
    """
    One row of mean test-set metrics per setting

    Settings without DSST start every guidance item at T - 1.
    """
    ctx = ctx.matched()
    rows = []
    for name in settings:
        setting = SETTINGS[name]
        config = ctx.config if setting.multi_guidance else single_guidance(ctx.config)
        adjuster = trained_adjuster(ctx) if setting.dgsa else baseline_adjuster(ctx)
        fixed = None if setting.dsst else ctx.sched.T - 1
        scores = score_results(ctx, restore_test_set(ctx, config, adjuster, fixed))
        rows.append({"setting": name, "description": setting.description,
                     "n_guidance": config.n_guidance, "adjuster": adjuster.describe(), **scores})
        if ctx.logger is not None:
            ctx.logger.info(f"Setting {name}: psnr={scores['psnr']:.2f}", {"suite": "mapping", "setting": name})
    return pd.DataFrame(rows)


def start_step_choices(ctx: ExperimentContext):
    """(label, fixed starting step or None for the table) of the starting-step sweep"""
    T = ctx.sched.T
    return [("0.4T", max(1, int(round(0.4 * T)))), ("T-1", T - 1), ("dsst", None)]


def run_start_step(ctx: ExperimentContext) -> pd.DataFrame:
    """Full restoration with a fixed early start, the latest start and the table start"""
    ctx = ctx.matched()
    adjuster = baseline_adjuster(ctx)
    rows = []
    for label, fixed in start_step_choices(ctx):
        results = restore_test_set(ctx, ctx.config, adjuster, fixed)
        mean_start = sum(r.guidance.global_t_start for r in results) / len(results)
        rows.append({"start": label, "mean_t_start": mean_start, **score_results(ctx, results)})
    return pd.DataFrame(rows)
