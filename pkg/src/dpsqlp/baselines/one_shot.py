"""
One-shot Gaussian histogram with noisy user-count key thresholding.

Input records must already be contribution-bounded: a user then touches at
most C keys (user-count L2 sensitivity √C) and moves one key's sum by at most
C·L (sum L2 sensitivity C·L).
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from dpsqlp.accountant import BudgetSplit, DpBudget, calibrate_sigma, calibrate_tau, split_budget
from dpsqlp.bounding import Record
from dpsqlp.errors import InvalidParameterError
from dpsqlp.perturb import ColumnSpec


@dataclass(frozen=True)
class OneShotConfig:
    budget: DpBudget
    C: int
    L_m: float
    beta: float
    mu: float = 0.0
    columns: tuple[ColumnSpec, ...] = ()
    key_selection_fraction: float = 0.5
    key_selection_delta_fraction: float = 2.0 / 3.0
    noise_free: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise InvalidParameterError(f"beta must be in (0, 1), got {self.beta}")
        if not self.columns:
            object.__setattr__(self, "columns", (ColumnSpec("value", "sum", self.L_m),))

    @cached_property
    def _share(self) -> BudgetSplit:
        return split_budget(self.budget, self.key_selection_fraction, self.key_selection_delta_fraction)

    @cached_property
    def _count_sigma(self) -> float:
        if self.noise_free:
            return 0.0
        return calibrate_sigma(1, self._share.key_selection, math.sqrt(self.C)).sigma

    @cached_property
    def _column_sigmas(self) -> dict[str, float]:
        if self.noise_free:
            return {c.name: 0.0 for c in self.columns}
        scale = self.C * math.sqrt(len(self.columns))
        return {c.name: calibrate_sigma(1, self._share.aggregation, scale * c.clamp).sigma for c in self.columns}

    def count_sigma(self) -> float:
        return self._count_sigma

    def column_sigma(self, column: ColumnSpec) -> float:
        return self._column_sigmas[column.name]

    def threshold(self) -> float:
        sigma = self.count_sigma()
        return self.mu if sigma == 0 else self.mu + calibrate_tau(sigma ** 2, self.beta)


def exact_histogram(records: Iterable[Record], columns: Sequence[ColumnSpec]) -> tuple[dict, dict]:
    """Unique users per key and per-column sums per key, in first-seen key order."""
    users: dict[str, set[str]] = {}
    sums: dict[str, dict[str, float]] = {}
    for record in records:
        users.setdefault(record.key, set()).add(record.user_id)
        per_key = sums.setdefault(record.key, {c.name: 0.0 for c in columns})
        for column in columns:
            per_key[column.name] += column.contribution(record)
    return {k: len(v) for k, v in users.items()}, sums


def one_shot_dp_histogram(
    records: Iterable[Record],
    cfg: OneShotConfig,
    rng: Optional[np.random.Generator] = None,
) -> dict[str, dict[str, float]]:
    """Released keys mapped to their noisy per-column sums."""
    counts, sums = exact_histogram(records, cfg.columns)
    if not counts:
        return {}

    keys = sorted(counts)
    rng = rng or np.random.default_rng()
    count_sigma = cfg.count_sigma()
    noisy_counts = np.array([counts[k] for k in keys], dtype=float)
    if count_sigma > 0:
        noisy_counts += count_sigma * rng.standard_normal(len(keys))
    threshold = cfg.threshold()
    released = [k for k, c in zip(keys, noisy_counts) if c > threshold]

    out: dict[str, dict[str, float]] = {k: {} for k in released}
    for column in cfg.columns:
        sigma = cfg.column_sigma(column)
        noise = sigma * rng.standard_normal(len(released)) if sigma > 0 else np.zeros(len(released))
        for k, z in zip(released, noise):
            out[k][column.name] = sums[k][column.name] + float(z)
    return out
