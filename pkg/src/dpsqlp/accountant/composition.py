"""
(epsilon, delta)-DP composition: group privacy, advanced composition and the
optimal homogeneous composition bound.
"""

import math
from typing import Literal

import numpy as np
from scipy.special import gammaln, logsumexp

from dpsqlp.accountant.budgets import DpBudget
from dpsqlp.errors import CalibrationError, InvalidParameterError

Composition = Literal["naive", "advanced", "optimal"]

# beyond this the optimal bound's binomial sums are not worth evaluating
MAX_OPTIMAL_ROUNDS = 10_000_000


def _check_rounds(rounds: int, name: str = "C") -> None:
    if int(rounds) != rounds or rounds < 1:
        raise InvalidParameterError(f"{name} must be a positive integer, got {rounds}")


def group_privacy(eps: float, delta: float, C: int) -> DpBudget:
    """Group privacy for groups of size C: (Cε, δ(e^{Cε}-1)/(e^ε-1))."""
    _check_rounds(C)
    base = DpBudget(eps, delta)
    if C == 1:
        return base

    factor = float(C) if eps == 0 else math.expm1(C * eps) / math.expm1(eps)
    group_delta = factor * delta
    if not group_delta < 1:
        raise InvalidParameterError(f"group privacy bound is vacuous (delta={group_delta})")
    return DpBudget(C * eps, group_delta)


def advanced_composition(per_round: DpBudget, C: int, delta_slack: float) -> DpBudget:
    """
    C-fold advanced composition, taking the better of the advanced bound
    (ε√(2C ln(1/δ')) + Cε(e^ε-1), Cδ+δ') and naive composition (Cε, Cδ).
    """
    _check_rounds(C)
    if not (0 < delta_slack < 1):
        raise InvalidParameterError(f"delta_slack must be in (0, 1), got {delta_slack}")

    eps, delta = per_round.epsilon, per_round.delta
    naive = DpBudget(C * eps, min(C * delta, math.nextafter(1.0, 0.0)))
    advanced_eps = eps * math.sqrt(2.0 * C * math.log(1.0 / delta_slack)) + C * eps * math.expm1(eps)
    if advanced_eps < naive.epsilon and C * delta + delta_slack < 1:
        return DpBudget(advanced_eps, C * delta + delta_slack)
    return naive


def _optimal_delta_sum(eps: float, k: int, eps_total: float) -> float:
    """
    Σ_l binom(k,l)·(e^{(k-l)ε} - e^{ε_total + lε})_+ / (1+e^ε)^k, in log space.
    """
    l = np.arange(k + 1, dtype=np.float64)
    gap = (k - 2.0 * l) * eps - eps_total
    mask = gap > 0
    if not mask.any():
        return 0.0
    l, gap = l[mask], gap[mask]
    log_binom = gammaln(k + 1.0) - gammaln(l + 1.0) - gammaln(k - l + 1.0)
    log_terms = log_binom + (k - l) * eps + np.log(-np.expm1(-gap)) - k * np.logaddexp(0.0, eps)
    value = float(np.exp(logsumexp(log_terms)))
    if not math.isfinite(value):
        raise CalibrationError(f"optimal composition overflowed for k={k}, eps={eps}")
    return value


def optimal_composition(per_round: DpBudget, k: int, delta_slack: float) -> DpBudget:
    """
    Exact k-fold composition of identical (ε, δ) mechanisms.

    Returns the smallest ε_total such that the composition is
    (ε_total, 1-(1-δ)^k(1-δ_slack))-DP. Bisection over ε_total to 1e-12.
    """
    _check_rounds(k, "k")
    if k == 1:
        return per_round
    if k > MAX_OPTIMAL_ROUNDS:
        raise CalibrationError(f"optimal composition over {k} rounds would overflow")
    if not (0 < delta_slack < 1):
        raise InvalidParameterError(f"delta_slack must be in (0, 1), got {delta_slack}")

    eps = per_round.epsilon
    total_delta = -math.expm1(k * math.log1p(-per_round.delta) + math.log1p(-delta_slack))
    if not total_delta < 1:
        raise CalibrationError(f"composed delta is vacuous for k={k}")

    lo, hi = 0.0, k * eps
    if _optimal_delta_sum(eps, k, lo) <= delta_slack:
        return DpBudget(0.0, total_delta)
    while hi - lo > 1e-12 * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if _optimal_delta_sum(eps, k, mid) <= delta_slack:
            hi = mid
        else:
            lo = mid
    return DpBudget(hi, total_delta)


def compose(per_round: DpBudget, rounds: int, delta_slack: float, method: Composition) -> DpBudget:
    """Dispatch to the named composition theorem."""
    if method == "naive":
        return DpBudget(rounds * per_round.epsilon, min(rounds * per_round.delta, math.nextafter(1.0, 0.0)))
    if method == "advanced":
        return advanced_composition(per_round, rounds, delta_slack)
    if method == "optimal":
        return optimal_composition(per_round, rounds, delta_slack)
    raise InvalidParameterError(f"unknown composition method: {method}")


def per_round_budget(total: DpBudget, rounds: int, method: Composition = "advanced") -> DpBudget:
    """
    Largest per-round budget whose `rounds`-fold composition fits `total`.
    Half of total.delta is slack, the other half is split across rounds.
    """
    _check_rounds(rounds, "rounds")
    if rounds == 1:
        return total
    if total.delta == 0 or method == "naive":
        return DpBudget(total.epsilon / rounds, total.delta / rounds)

    slack = total.delta / 2.0
    round_delta = total.delta / (2.0 * rounds)

    lo, hi = 0.0, total.epsilon
    if compose(DpBudget(hi, round_delta), rounds, slack, method).epsilon <= total.epsilon:
        return DpBudget(hi, round_delta)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if compose(DpBudget(mid, round_delta), rounds, slack, method).epsilon <= total.epsilon:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(hi, 1e-300):
            break
    return DpBudget(lo, round_delta)
