"""
Noise and threshold calibration from target budgets, and budget splitting.
"""

import math

from scipy.stats import norm

from dpsqlp.accountant.budgets import BudgetSplit, CalibrationResult, DpBudget
from dpsqlp.accountant.conversions import zcdp_to_dp_tight
from dpsqlp.errors import CalibrationError, InvalidParameterError

SIGMA_SEARCH_LOW = 1e-6
SIGMA_SEARCH_HIGH = 1e12
SIGMA_REL_TOL = 1e-10


def tree_height(T: int) -> int:
    """h = ⌈lg T⌉ for T ≥ 1."""
    if int(T) != T or T < 1:
        raise InvalidParameterError(f"T must be a positive integer, got {T}")
    return (int(T) - 1).bit_length()


def tree_rho(node_sensitivity: float, sigma: float, levels: int) -> float:
    """zCDP of one tree: every level is one Gaussian release of the node sensitivity."""
    return levels * node_sensitivity ** 2 / (2.0 * sigma ** 2)


def calibrate_sigma(T: int, target: DpBudget, node_sensitivity: float) -> CalibrationResult:
    """
    Smallest σ such that a tree with T leaves, whose leaf values move any node
    by at most node_sensitivity, is target-DP under the tight conversion.
    Bisection in log σ over [1e-6, 1e12].
    """
    height = tree_height(T)
    if target.epsilon <= 0:
        raise InvalidParameterError("target epsilon must be > 0")
    if not (0 < target.delta < 1):
        raise InvalidParameterError("target delta must be in (0, 1)")
    if node_sensitivity <= 0:
        raise InvalidParameterError(f"node sensitivity must be > 0, got {node_sensitivity}")

    levels = height + 1

    def within_budget(sigma: float) -> bool:
        return zcdp_to_dp_tight(tree_rho(node_sensitivity, sigma, levels), target.delta) <= target.epsilon

    lo, hi = math.log(SIGMA_SEARCH_LOW), math.log(SIGMA_SEARCH_HIGH)
    if not within_budget(SIGMA_SEARCH_HIGH):
        raise CalibrationError(f"no sigma in [{SIGMA_SEARCH_LOW}, {SIGMA_SEARCH_HIGH}] meets {target}")
    if within_budget(SIGMA_SEARCH_LOW):
        return CalibrationResult(sigma=SIGMA_SEARCH_LOW, tree_height=height)

    while hi - lo > SIGMA_REL_TOL:
        mid = 0.5 * (lo + hi)
        if within_budget(math.exp(mid)):
            hi = mid
        else:
            lo = mid
    return CalibrationResult(sigma=math.exp(hi), tree_height=height)


def calibrate_tau(variance: float, beta: float) -> float:
    """τ = λ·Φ⁻¹(1-β) for prefix-error variance λ²."""
    if not (0 < beta < 1):
        raise InvalidParameterError(f"beta must be in (0, 1), got {beta}")
    if not variance > 0:
        raise InvalidParameterError(f"variance must be > 0, got {variance}")
    return math.sqrt(variance) * float(norm.isf(beta))


def split_budget(
    total: DpBudget,
    key_selection_fraction: float = 0.5,
    key_selection_delta_fraction: float = 2.0 / 3.0,
) -> BudgetSplit:
    """Split a total budget between key selection and aggregation (default ε/2, 2δ/3 to selection)."""
    for name, value in (("key_selection_fraction", key_selection_fraction),
                        ("key_selection_delta_fraction", key_selection_delta_fraction)):
        if not (0 <= value <= 1):
            raise InvalidParameterError(f"{name} must be in [0, 1], got {value}")

    key_selection = DpBudget(total.epsilon * key_selection_fraction, total.delta * key_selection_delta_fraction)
    aggregation = DpBudget(
        max(total.epsilon - key_selection.epsilon, 0.0),
        max(total.delta - key_selection.delta, 0.0),
    )
    return BudgetSplit(key_selection=key_selection, aggregation=aggregation)
