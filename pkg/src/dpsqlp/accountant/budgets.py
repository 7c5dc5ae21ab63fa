"""
Privacy budget value types.
"""

import math
from dataclasses import dataclass

from dpsqlp.errors import InvalidParameterError


@dataclass(frozen=True)
class ZcdpBudget:
    """A rho-zCDP guarantee."""
    rho: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise InvalidParameterError(f"rho must be finite and >= 0, got {self.rho}")

    def __add__(self, other: "ZcdpBudget") -> "ZcdpBudget":
        return ZcdpBudget(self.rho + other.rho)


@dataclass(frozen=True)
class DpBudget:
    """An (epsilon, delta)-DP guarantee."""
    epsilon: float
    delta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise InvalidParameterError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not (0 <= self.delta < 1):
            raise InvalidParameterError(f"delta must be in [0, 1), got {self.delta}")

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta}


@dataclass(frozen=True)
class BudgetSplit:
    """Shares of a total budget for key selection and aggregation."""
    key_selection: DpBudget
    aggregation: DpBudget

    @property
    def total(self) -> DpBudget:
        return DpBudget(
            self.key_selection.epsilon + self.aggregation.epsilon,
            self.key_selection.delta + self.aggregation.delta,
        )


@dataclass(frozen=True)
class CalibrationResult:
    """Per-node noise for a tree with 2^tree_height leaves."""
    sigma: float
    tree_height: int

    @property
    def levels(self) -> int:
        # a leaf value is written to every node on its root path
        return self.tree_height + 1
