from dpsqlp.perturb.aggregation import (
    AggregationState,
    ColumnSpec,
    Release,
    accumulate_delta,
    perturbation_sigma,
    release,
)

__all__ = [
    "AggregationState",
    "ColumnSpec",
    "Release",
    "accumulate_delta",
    "perturbation_sigma",
    "release",
]
