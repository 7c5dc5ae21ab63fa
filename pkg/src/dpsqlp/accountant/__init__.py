"""
Privacy calculus: zCDP arithmetic, conversions, composition and calibration.
"""

from dpsqlp.accountant.budgets import BudgetSplit, CalibrationResult, DpBudget, ZcdpBudget
from dpsqlp.accountant.calibration import (
    calibrate_sigma,
    calibrate_tau,
    split_budget,
    tree_height,
    tree_rho,
)
from dpsqlp.accountant.composition import (
    advanced_composition,
    compose,
    group_privacy,
    optimal_composition,
    per_round_budget,
)
from dpsqlp.accountant.conversions import (
    compose_zcdp,
    rho_for_budget,
    zcdp_of_gaussian,
    zcdp_to_dp_closed,
    zcdp_to_dp_tight,
)

__all__ = [
    "BudgetSplit",
    "CalibrationResult",
    "DpBudget",
    "ZcdpBudget",
    "advanced_composition",
    "calibrate_sigma",
    "calibrate_tau",
    "compose",
    "compose_zcdp",
    "group_privacy",
    "optimal_composition",
    "per_round_budget",
    "rho_for_budget",
    "split_budget",
    "tree_height",
    "tree_rho",
    "zcdp_of_gaussian",
    "zcdp_to_dp_closed",
    "zcdp_to_dp_tight",
]
