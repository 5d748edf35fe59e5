"""
Guidance-count sweep with the preset lambda weights
"""

from typing import Sequence

import pandas as pd

from ..config.settings import LAMBDA_PRESETS
from .common import ExperimentContext, baseline_adjuster, restore_test_set, score_results

OFFSETS = [0.0, 1.0, 2.0, 3.0]


def run_guidance_count(ctx: ExperimentContext, counts: Sequence[int] = (1, 2, 3, 4)) -> pd.DataFrame:
    """
    Restore the test set once per guidance count

    Consistency is always measured against the heaviest-blur item, so rows
    are comparable across counts.
    """
    ctx = ctx.matched()
    adjuster = baseline_adjuster(ctx)
    rows = []
    for n in counts:
        config = ctx.config.with_overrides(n_guidance=n, lambda_weights=list(LAMBDA_PRESETS[n]),
                                           std_offsets=OFFSETS[:max(n, 1)])
        scores = score_results(ctx, restore_test_set(ctx, config, adjuster))
        rows.append({"n_guidance": n, "lambda": "/".join(f"{w:g}" for w in LAMBDA_PRESETS[n]), **scores})
    return pd.DataFrame(rows)
