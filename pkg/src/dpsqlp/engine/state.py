"""
Per-key engine state: key selection, aggregation buffers and trees, and the
pending prediction.
"""

from dataclasses import dataclass
from typing import Optional

from dpsqlp.keyselect import KeySelectionState
from dpsqlp.perturb import AggregationState
from dpsqlp.seeding import derive_seed


@dataclass
class KeyState:
    key: str
    selection: KeySelectionState
    aggregation: AggregationState
    predicted_release: Optional[int] = None

    @classmethod
    def new(cls, key: str, run_seed: int, window: int) -> "KeyState":
        return cls(
            key=key,
            selection=KeySelectionState(key=key, seed=derive_seed(run_seed, "window", window, "select", key)),
            aggregation=AggregationState(key=key, seed=derive_seed(run_seed, "window", window, "aggregate", key)),
        )

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "selection": self.selection.to_dict(),
            "aggregation": self.aggregation.to_dict(),
            "predicted_release": self.predicted_release,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KeyState":
        return cls(
            key=data["key"],
            selection=KeySelectionState.from_dict(data["selection"]),
            aggregation=AggregationState.from_dict(data["aggregation"]),
            predicted_release=data.get("predicted_release"),
        )
