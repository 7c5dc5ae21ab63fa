from dpsqlp.bounding.records import (
    Record,
    SensitivityConfig,
    UserBudgetTable,
    bound_contributions,
    clamp_value,
    suggest_contribution_bound,
)

__all__ = [
    "Record",
    "SensitivityConfig",
    "UserBudgetTable",
    "bound_contributions",
    "clamp_value",
    "suggest_contribution_bound",
]
