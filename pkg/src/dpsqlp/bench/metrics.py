"""
Utility metrics of a released histogram against the ground truth.
"""

from dataclasses import asdict, dataclass
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np

from dpsqlp.errors import InvalidParameterError


@dataclass(frozen=True)
class UtilityReport:
    retained_keys: int
    l_inf: float
    l1: float
    l2: float

    def to_dict(self) -> dict:
        return asdict(self)


def utility_metrics(dp_histogram: Mapping[Hashable, float], truth_histogram: Mapping[Hashable, float]) -> UtilityReport:
    """
    Errors over the union of keys: a released key is off by |M̂ - M| (M = 0 if
    it has no truth), an unreleased truth key loses its whole mass.
    """
    keys = set(dp_histogram) | set(truth_histogram)
    errors = np.array(
        [abs(dp_histogram.get(k, 0.0) - truth_histogram.get(k, 0.0)) for k in keys],
        dtype=np.float64,
    )
    if errors.size == 0:
        return UtilityReport(retained_keys=0, l_inf=0.0, l1=0.0, l2=0.0)
    return UtilityReport(
        retained_keys=len(dp_histogram),
        l_inf=float(errors.max()),
        l1=float(errors.sum()),
        l2=float(np.linalg.norm(errors)),
    )


def histogram_at(
    releases: Iterable[dict],
    column: str = "value",
    trigger: Optional[int] = None,
    carry_forward: bool = True,
) -> dict[tuple[int, str], float]:
    """
    Released histogram keyed by (window, key). With carry_forward, each key
    keeps its latest release up to `trigger` (default: all); otherwise only
    releases made exactly at `trigger` count.
    """
    if not carry_forward and trigger is None:
        raise InvalidParameterError("a trigger is required without carry_forward")
    relevant = [r for r in releases if r["column"] == column and (trigger is None or r["trigger"] <= trigger)]
    if not carry_forward:
        relevant = [r for r in relevant if r["trigger"] == trigger]

    out: dict[tuple[int, str], float] = {}
    latest: dict[tuple[int, str], int] = {}
    for r in relevant:
        slot = (r["window"], r["key"])
        if r["trigger"] >= latest.get(slot, 0):
            latest[slot] = r["trigger"]
            out[slot] = float(r["value"])
    return out
