from dpsqlp.baselines.one_shot import OneShotConfig, exact_histogram, one_shot_dp_histogram
from dpsqlp.baselines.streaming import baseline_incremental, baseline_repeated, per_run_budget

__all__ = [
    "OneShotConfig",
    "baseline_incremental",
    "baseline_repeated",
    "exact_histogram",
    "one_shot_dp_histogram",
    "per_run_budget",
]
