"""
Desk-scale experiment drivers
"""

from typing import Callable, Dict

import pandas as pd

from .ablation import SETTINGS, run_start_step, run_mapping_ablation
from .acceptance import run_dgsa_value, run_end_to_end, run_end_to_end_harsh
from .common import ExperimentContext, prepare_context, write_report
from .guidance_count import run_guidance_count
from .kernel_refinement import run_kernel_refinement, summarize_refinement

SUITES: Dict[str, Callable[[ExperimentContext], pd.DataFrame]] = {
    "mapping": run_mapping_ablation,
    "guidance-count": run_guidance_count,
    "start-step": run_start_step,
    "kernel-refinement": run_kernel_refinement,
    "end-to-end": run_end_to_end,
    "end-to-end-harsh": run_end_to_end_harsh,
    "dgsa-value": run_dgsa_value,
}

# short names accepted on the command line
SUITE_ALIASES: Dict[str, str] = {
    "tab3": "mapping",
}


def resolve_suite(name: str) -> str:
    """Canonical suite name of a suite or alias"""
    name = SUITE_ALIASES.get(name, name)
    if name not in SUITES:
        raise ValueError(f"Unsupported suite: {name}")
    return name


def run_suite(name: str, ctx: ExperimentContext) -> pd.DataFrame:
    """Run one named suite"""
    return SUITES[resolve_suite(name)](ctx)


__all__ = [
    "SETTINGS", "SUITES", "SUITE_ALIASES", "ExperimentContext", "prepare_context", "write_report", "resolve_suite",
    "run_suite", "run_mapping_ablation", "run_start_step", "run_guidance_count", "run_kernel_refinement",
    "summarize_refinement", "run_end_to_end", "run_end_to_end_harsh", "run_dgsa_value",
]
