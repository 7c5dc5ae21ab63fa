"""
Privacy plan: how a run's (epsilon, delta) is spent and the noise it buys.
"""

import math
from dataclasses import dataclass, field
from typing import Dict

from dpsqlp.accountant import (
    BudgetSplit,
    DpBudget,
    calibrate_sigma,
    compose,
    per_round_budget,
    split_budget,
)
from dpsqlp.bounding import SensitivityConfig
from dpsqlp.engine.config import PipelineConfig
from dpsqlp.keyselect import threshold_fn
from dpsqlp.keyselect.selection import TauFn
from dpsqlp.logs import get_logger
from dpsqlp.perturb import perturbation_sigma

logger = get_logger(__name__)


@dataclass(frozen=True)
class PrivacyPlan:
    total: DpBudget
    split: BudgetSplit
    selection_round: DpBudget
    selection_composed: DpBudget
    selection_sigma: float
    column_sigmas: Dict[str, float] = field(default_factory=dict)
    selection_failure_delta: float = 0.0
    beta: float = 0.0
    T: int = 1

    def tau_fn(self) -> TauFn:
        return threshold_fn(self.beta, self.T)

    def to_dict(self) -> dict:
        return {
            "total": self.total.to_dict(),
            "key_selection": self.split.key_selection.to_dict(),
            "aggregation": self.split.aggregation.to_dict(),
            "key_selection_per_round": self.selection_round.to_dict(),
            "key_selection_composed": self.selection_composed.to_dict(),
            "key_selection_failure_delta": self.selection_failure_delta,
            "selection_sigma": self.selection_sigma,
            "column_sigmas": dict(self.column_sigmas),
        }


def build_plan(cfg: PipelineConfig) -> PrivacyPlan:
    """
    Split the budget, invert C-round composition for key selection and
    calibrate every tree. Noiseless runs keep the accounting but zero the noise.
    """
    split = split_budget(cfg.total_budget, cfg.key_selection_fraction, cfg.key_selection_delta_fraction)
    method = cfg.key_selection_composition
    round_budget = per_round_budget(split.key_selection, cfg.C, method)
    composed = compose(round_budget, cfg.C, split.key_selection.delta / 2.0, method) if cfg.C > 1 else round_budget

    if cfg.noiseless:
        selection_sigma = 0.0
        column_sigmas = {c.name: 0.0 for c in cfg.columns}
    else:
        selection_sigma = calibrate_sigma(cfg.T, round_budget, 1.0).sigma
        column_sigmas = {
            c.name: perturbation_sigma(
                SensitivityConfig(cfg.C, c.clamp), split.aggregation, cfg.release_capacity, len(cfg.columns)
            )
            for c in cfg.columns
        }

    failure = cfg.C * (math.exp(round_budget.epsilon) + 1.0) * cfg.beta
    plan = PrivacyPlan(
        total=cfg.total_budget,
        split=split,
        selection_round=round_budget,
        selection_composed=composed,
        selection_sigma=selection_sigma,
        column_sigmas=column_sigmas,
        selection_failure_delta=failure,
        beta=cfg.beta,
        T=cfg.T,
    )
    logger.info(
        "privacy plan: selection sigma %.4g, column sigmas %s, failure delta %.3g",
        selection_sigma, column_sigmas, failure,
    )
    return plan
