"""
Micro-batch streaming engine: windowing, triggering, persistent state and
empty-key release prediction.
"""

from dpsqlp.engine.config import PipelineConfig, WindowSpec
from dpsqlp.engine.pipeline import FAULT_BOUNDARIES, PipelineResult, RunReport, run_pipeline
from dpsqlp.engine.plan import PrivacyPlan, build_plan
from dpsqlp.engine.prediction import handle_due_predictions, predict_empty_release
from dpsqlp.engine.state import KeyState
from dpsqlp.engine.state_store import StateStore, StoreStats
from dpsqlp.engine.windowing import MicroBatch, WindowAssignment, assign_windows, micro_batches

__all__ = [
    "FAULT_BOUNDARIES",
    "KeyState",
    "MicroBatch",
    "PipelineConfig",
    "PipelineResult",
    "PrivacyPlan",
    "RunReport",
    "StateStore",
    "StoreStats",
    "WindowAssignment",
    "WindowSpec",
    "assign_windows",
    "build_plan",
    "handle_due_predictions",
    "micro_batches",
    "predict_empty_release",
    "run_pipeline",
]
