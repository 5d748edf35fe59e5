"""
Core sampling engine and restoration orchestration
"""

from .engine import (
    GuidedSampler,
    SamplingResult,
    descent_violations,
    guided_step,
    initial_state,
    read_trace,
    running_residual,
    trace_frame,
    write_trace,
)
from .pipeline import (
    RestorationComponents,
    RestorationPipeline,
    RestorationResult,
    load_components,
    restore_all,
    run_restoration,
)

__all__ = [
    "GuidedSampler", "SamplingResult", "descent_violations", "guided_step", "initial_state", "read_trace",
    "running_residual", "trace_frame", "write_trace",
    "RestorationComponents", "RestorationPipeline", "RestorationResult", "load_components", "restore_all",
    "run_restoration",
]
