"""
Hierarchical perturbation of selected keys' running aggregates.

Per key, every aggregation column owns a DP tree. Clamped contributions buffer
until the key is selected; a release writes the buffer as the next leaf and
outputs the noisy prefix sum over all of the key's releases so far.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

from dpsqlp.accountant import DpBudget, calibrate_sigma
from dpsqlp.bounding import Record, SensitivityConfig
from dpsqlp.dptree import TreeState, add_to_tree, get_total_sum, initialize_tree, tree_from_text, tree_to_text
from dpsqlp.errors import ContractViolationError, InvalidParameterError, SequencingError
from dpsqlp.seeding import derive_seed

ColumnKind = Literal["sum", "count"]


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: ColumnKind = "sum"
    clamp: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("sum", "count"):
            raise InvalidParameterError(f"unsupported aggregation {self.kind!r} for column {self.name!r}")
        if not self.clamp > 0:
            raise InvalidParameterError(f"column {self.name!r} clamp must be > 0")
        if self.kind == "count" and self.clamp != 1.0:
            raise InvalidParameterError(f"count column {self.name!r} has clamp 1")

    def contribution(self, record: Record) -> float:
        return 1.0 if self.kind == "count" else record.value

    @classmethod
    def parse(cls, text: str, default_clamp: float) -> "ColumnSpec":
        """'name', 'name:sum' or 'name:count'."""
        name, _, kind = text.partition(":")
        kind = kind or "sum"
        return cls(name=name, kind=kind, clamp=1.0 if kind == "count" else default_clamp)


@dataclass(frozen=True)
class Release:
    trigger_index: int
    key: str
    column: str
    noisy_value: float

    def to_dict(self) -> dict:
        return {"trigger": self.trigger_index, "key": self.key, "column": self.column, "value": self.noisy_value}


@dataclass
class AggregationState:
    key: str
    seed: int
    trees: dict[str, TreeState] = field(default_factory=dict)
    last_release_trigger: int = 0
    buffered_delta: dict[str, float] = field(default_factory=dict)
    release_count: int = 0

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "seed": str(self.seed),
            "trees": {c: tree_to_text(t) for c, t in self.trees.items()},
            "last_release_trigger": self.last_release_trigger,
            "buffered_delta": dict(self.buffered_delta),
            "release_count": self.release_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AggregationState":
        return cls(
            key=data["key"],
            seed=int(data["seed"]),
            trees={c: tree_from_text(t) for c, t in data.get("trees", {}).items()},
            last_release_trigger=data.get("last_release_trigger", 0),
            buffered_delta=dict(data.get("buffered_delta", {})),
            release_count=data.get("release_count", 0),
        )


def accumulate_delta(
    state: AggregationState,
    records: Iterable[Record],
    columns: Sequence[ColumnSpec],
) -> AggregationState:
    """Add clamped contributions of records to each column's buffer."""
    for record in records:
        if record.key != state.key:
            raise ContractViolationError(f"record for key {record.key!r} routed to {state.key!r}")
        for column in columns:
            v = column.contribution(record)
            if abs(v) > column.clamp:
                raise ContractViolationError(
                    f"unclamped value {v} for column {column.name!r} (clamp {column.clamp})"
                )
            state.buffered_delta[column.name] = state.buffered_delta.get(column.name, 0.0) + v
    return state


def release(
    state: AggregationState,
    trigger_index: int,
    selected: bool,
    sigmas: Mapping[str, float],
    capacity: int,
) -> list[Release]:
    """
    Write each column's buffered delta as the key's next leaf and emit the
    noisy running total. Trees are created on the key's first release.
    """
    if not selected:
        raise SequencingError(f"key {state.key!r} released at trigger {trigger_index} without selection")
    if trigger_index <= state.last_release_trigger:
        raise SequencingError(
            f"key {state.key!r}: release at {trigger_index} after release at {state.last_release_trigger}"
        )

    leaf = state.release_count + 1
    out = []
    for column, sigma in sigmas.items():
        tree = state.trees.get(column)
        if tree is None:
            tree = initialize_tree(capacity, sigma, derive_seed(state.seed, "column", column))
            state.trees[column] = tree
        add_to_tree(tree, leaf, state.buffered_delta.get(column, 0.0))
        out.append(Release(trigger_index, state.key, column, get_total_sum(tree, leaf).value))
        state.buffered_delta[column] = 0.0

    state.release_count = leaf
    state.last_release_trigger = trigger_index
    return out


def perturbation_sigma(cfg: SensitivityConfig, budget: DpBudget, T: int, columns: int = 1) -> float:
    """
    Per-node σ of one column's tree. A user moves any node by at most C·L_m;
    columns share the aggregation budget equally.
    """
    if columns < 1:
        raise InvalidParameterError(f"columns must be >= 1, got {columns}")
    node_sensitivity = cfg.l1_sensitivity * math.sqrt(columns)
    return calibrate_sigma(T, budget, node_sensitivity).sigma
