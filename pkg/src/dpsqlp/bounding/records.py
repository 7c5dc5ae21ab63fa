"""
Record type, global user contribution bounding and value clamping.
"""

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from dpsqlp.errors import InvalidParameterError
from dpsqlp.logs import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, slots=True)
class Record:
    """One stream element; timestamp is event time in epoch seconds."""
    key: str
    value: float
    timestamp: float
    user_id: str


@dataclass(frozen=True)
class SensitivityConfig:
    C: int
    L_m: float

    def __post_init__(self) -> None:
        if int(self.C) != self.C or self.C < 1:
            raise InvalidParameterError(f"C must be a positive integer, got {self.C}")
        if not self.L_m > 0:
            raise InvalidParameterError(f"L_m must be > 0, got {self.L_m}")

    @property
    def l1_sensitivity(self) -> float:
        return self.C * self.L_m


class UserBudgetTable:
    """
    Records used per user in the current privacy unit. Tracks which users
    changed since the last checkpoint so the store only persists those.
    """

    def __init__(self, used: Optional[dict[str, int]] = None):
        self._used: dict[str, int] = dict(used or {})
        self._dirty: set[str] = set()

    def records_used(self, user_id: str) -> int:
        return self._used.get(user_id, 0)

    def consume(self, user_id: str) -> int:
        count = self._used.get(user_id, 0) + 1
        self._used[user_id] = count
        self._dirty.add(user_id)
        return count

    def load(self, entries: dict[str, int]) -> None:
        """Overwrite counters from persisted entries without marking them dirty."""
        self._used.update(entries)

    def dirty_entries(self) -> dict[str, int]:
        return {u: self._used[u] for u in self._dirty}

    def mark_clean(self) -> None:
        self._dirty.clear()

    def reset(self) -> None:
        """Start a new privacy unit (window boundary)."""
        self._used.clear()
        self._dirty.clear()

    def to_dict(self) -> dict[str, int]:
        return dict(self._used)

    def __len__(self) -> int:
        return len(self._used)

    def __contains__(self, user_id: str) -> bool:
        return user_id in self._used


def clamp_value(v: float, L_m: float) -> float:
    if not L_m > 0:
        raise InvalidParameterError(f"L_m must be > 0, got {L_m}")
    return min(max(v, -L_m), L_m)


def bound_contributions(
    batch: Sequence[Record],
    table: UserBudgetTable,
    cfg: SensitivityConfig,
) -> list[Record]:
    """
    Keep each user's first C records in processing order, clamping kept values.
    Later records of a user whose budget is spent are dropped.
    """
    kept: list[Record] = []
    dropped = 0
    for record in batch:
        if table.records_used(record.user_id) >= cfg.C:
            dropped += 1
            continue
        table.consume(record.user_id)
        clamped = clamp_value(record.value, cfg.L_m)
        kept.append(record if clamped == record.value else replace(record, value=clamped))

    if dropped:
        logger.debug("contribution bounding dropped %d of %d records", dropped, len(batch))
    return kept


def suggest_contribution_bound(
    records: Iterable[Record],
    percentile: float = 99.0,
    sample_fraction: float = 1.0,
    seed: int = 0,
) -> int:
    """
    Percentile of per-user record counts, optionally on a user sample.

    Not differentially private: it reads raw per-user counts. Use it on a
    public or held-out sample only.
    """
    if not 0 < percentile <= 100:
        raise InvalidParameterError(f"percentile must be in (0, 100], got {percentile}")
    if not 0 < sample_fraction <= 1:
        raise InvalidParameterError(f"sample_fraction must be in (0, 1], got {sample_fraction}")

    counts: dict[str, int] = {}
    for record in records:
        counts[record.user_id] = counts.get(record.user_id, 0) + 1
    if not counts:
        raise InvalidParameterError("cannot suggest a contribution bound from an empty stream")

    per_user = np.fromiter(counts.values(), dtype=np.int64, count=len(counts))
    if sample_fraction < 1:
        rng = np.random.default_rng(seed)
        size = max(1, int(round(sample_fraction * per_user.size)))
        per_user = rng.choice(per_user, size=size, replace=False)

    logger.warning("suggest_contribution_bound reads raw user counts and is not differentially private")
    return max(1, int(np.ceil(np.percentile(per_user, percentile))))
