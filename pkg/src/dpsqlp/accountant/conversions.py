"""
zCDP arithmetic and conversions to (epsilon, delta)-DP.
"""

import math
from typing import Union

import numpy as np
from scipy.optimize import minimize_scalar

from dpsqlp.accountant.budgets import DpBudget, ZcdpBudget
from dpsqlp.errors import CalibrationError, InvalidParameterError

RhoLike = Union[ZcdpBudget, float]

# search over alpha = 1 + exp(x)
_LOG_ALPHA_GRID = np.linspace(-15.0, 45.0, 1201)


def _rho(rho: RhoLike) -> float:
    return rho.rho if isinstance(rho, ZcdpBudget) else ZcdpBudget(float(rho)).rho


def _check_delta(delta: float) -> None:
    if not (0 < delta < 1):
        raise InvalidParameterError(f"delta must be in (0, 1), got {delta}")


def zcdp_of_gaussian(l2_sensitivity: float, sigma: float) -> ZcdpBudget:
    """zCDP cost of one Gaussian release: Δ²/(2σ²)."""
    if l2_sensitivity <= 0 or sigma <= 0:
        raise InvalidParameterError(
            f"sensitivity and sigma must be > 0, got {l2_sensitivity}, {sigma}"
        )
    return ZcdpBudget(l2_sensitivity ** 2 / (2.0 * sigma ** 2))


def compose_zcdp(*budgets: ZcdpBudget) -> ZcdpBudget:
    """Sequential composition: rho values add."""
    return ZcdpBudget(math.fsum(b.rho for b in budgets))


def zcdp_to_dp_closed(rho: RhoLike, delta: float) -> float:
    """Closed-form conversion ε = ρ + 2√(ρ ln(1/δ))."""
    value = _rho(rho)
    _check_delta(delta)
    return value + 2.0 * math.sqrt(value * math.log(1.0 / delta))


def _conversion_objective(log_alpha_minus_one: np.ndarray, rho: float, log_inv_delta: float) -> np.ndarray:
    am1 = np.exp(log_alpha_minus_one)
    alpha = 1.0 + am1
    tail = log_inv_delta + am1 * np.log1p(-1.0 / alpha) - np.log(alpha)
    return alpha * rho + tail / am1


def zcdp_to_dp_tight(rho: RhoLike, delta: float) -> float:
    """
    Optimised conversion: minimise over Rényi order α > 1 of
    αρ + (ln(1/δ) + (α-1)ln(1-1/α) - ln α)/(α-1).
    Never exceeds the closed form.
    """
    value = _rho(rho)
    _check_delta(delta)
    if value == 0:
        return 0.0

    log_inv_delta = math.log(1.0 / delta)
    grid_values = _conversion_objective(_LOG_ALPHA_GRID, value, log_inv_delta)
    if not np.isfinite(grid_values).any():
        raise CalibrationError(f"conversion objective is not finite for rho={value}")

    best = int(np.nanargmin(grid_values))
    lo = _LOG_ALPHA_GRID[max(best - 1, 0)]
    hi = _LOG_ALPHA_GRID[min(best + 1, len(_LOG_ALPHA_GRID) - 1)]
    result = minimize_scalar(
        lambda x: float(_conversion_objective(np.asarray(x), value, log_inv_delta)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if not result.success or not math.isfinite(result.fun):
        raise CalibrationError(f"zCDP conversion did not converge for rho={value}, delta={delta}")

    epsilon = min(float(result.fun), float(grid_values[best]), zcdp_to_dp_closed(value, delta))
    return max(epsilon, 0.0)


def rho_for_budget(target: DpBudget, rel_tol: float = 1e-10) -> ZcdpBudget:
    """Largest ρ whose tight conversion at target.delta stays within target.epsilon."""
    _check_delta(target.delta)
    if target.epsilon == 0:
        return ZcdpBudget(0.0)

    lo, hi = 0.0, max(target.epsilon, 1.0)
    while zcdp_to_dp_tight(hi, target.delta) <= target.epsilon:
        hi *= 2.0
        if hi > 1e12:
            raise CalibrationError(f"no finite rho bound for {target}")

    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if zcdp_to_dp_tight(mid, target.delta) <= target.epsilon:
            lo = mid
        else:
            hi = mid
    return ZcdpBudget(lo)
