"""
Streaming private key selection.

Each key counts unique users per selection round. Once the noiseless round
count clears the mu gate, a DP tree is spawned (zero-backfilled up to the
current trigger) and the key is selected when its noisy prefix count exceeds
mu + tau. A selection restarts the round; after C rounds the key is
permanently selected and stops spending selection budget.
"""

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.stats import norm

from dpsqlp.dptree import (
    TreeState,
    add_to_tree,
    all_prefix_estimates,
    all_prefix_variances,
    initialize_tree,
    tree_from_text,
    tree_to_text,
)
from dpsqlp.errors import InvalidParameterError, SequencingError, StateError
from dpsqlp.seeding import derive_seed, user_fingerprint

TauFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class KeySelectionState:
    key: str
    seed: int
    tree: Optional[TreeState] = None
    round_users: set[str] = field(default_factory=set)
    cumulative_count: int = 0
    inserted_count: int = 0
    rounds_completed: int = 0
    active: bool = True
    last_trigger: int = 0
    selected_at: Optional[int] = None

    @property
    def permanently_selected(self) -> bool:
        return not self.active

    def round_seed(self) -> int:
        return derive_seed(self.seed, "round", self.rounds_completed)

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "seed": str(self.seed),
            "tree": tree_to_text(self.tree) if self.tree is not None else None,
            "round_users": sorted(self.round_users),
            "cumulative_count": self.cumulative_count,
            "inserted_count": self.inserted_count,
            "rounds_completed": self.rounds_completed,
            "active": self.active,
            "last_trigger": self.last_trigger,
            "selected_at": self.selected_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KeySelectionState":
        return cls(
            key=data["key"],
            seed=int(data["seed"]),
            tree=tree_from_text(data["tree"]) if data.get("tree") else None,
            round_users=set(data.get("round_users", [])),
            cumulative_count=data.get("cumulative_count", 0),
            inserted_count=data.get("inserted_count", 0),
            rounds_completed=data.get("rounds_completed", 0),
            active=data.get("active", True),
            last_trigger=data.get("last_trigger", 0),
            selected_at=data.get("selected_at"),
        )


@dataclass(frozen=True)
class SelectionOutcome:
    selected: bool
    noisy_count: float
    trigger_index: int
    threshold: float = 0.0


def threshold_fn(beta: float, T: int) -> TauFn:
    """τ as a function of prefix variance, with β spread uniformly over T triggers."""
    if not 0 < beta < 1:
        raise InvalidParameterError(f"beta must be in (0, 1), got {beta}")
    z = float(norm.isf(beta / T))

    def tau(variance):
        return np.sqrt(variance) * z

    return tau


def mu_prefilter(noiseless_count: int, mu: float) -> bool:
    return noiseless_count > mu


def _fill_zeros_to(tree: TreeState, last: int) -> None:
    for i in range(tree.next_leaf, last + 1):
        add_to_tree(tree, i, 0.0)


def spawn_tree_at(trigger_index: int, sigma: float, seed: int, T: int) -> TreeState:
    """Tree whose leaves 1..trigger_index-1 hold zeros, ready for leaf trigger_index."""
    if trigger_index < 1:
        raise InvalidParameterError(f"trigger_index must be >= 1, got {trigger_index}")
    tree = initialize_tree(T, sigma, seed)
    _fill_zeros_to(tree, trigger_index - 1)
    return tree


def observe_key(state: KeySelectionState, trigger_index: int, new_user_ids: Iterable[str]) -> KeySelectionState:
    """
    Count the round's new unique users at trigger_index. If the key has a live
    tree, write the count increment as leaf trigger_index (zeros in between).
    """
    if not state.active:
        raise StateError(f"key {state.key!r} is permanently selected")
    if trigger_index <= state.last_trigger:
        raise SequencingError(
            f"key {state.key!r}: trigger {trigger_index} after trigger {state.last_trigger}"
        )

    fresh = {user_fingerprint(u) for u in new_user_ids} - state.round_users
    state.round_users |= fresh
    state.cumulative_count += len(fresh)
    state.last_trigger = trigger_index

    if state.tree is not None:
        _fill_zeros_to(state.tree, trigger_index - 1)
        add_to_tree(state.tree, trigger_index, float(state.cumulative_count - state.inserted_count))
        state.inserted_count = state.cumulative_count
    return state


def open_gate(state: KeySelectionState, trigger_index: int, mu: float, sigma: float, T: int) -> bool:
    """
    Spawn the round's tree once the noiseless count clears mu. The first leaf
    carries every user counted in the round so far. Returns True if a tree is live.
    """
    if state.tree is not None:
        return True
    if not mu_prefilter(state.cumulative_count, mu):
        return False

    state.tree = spawn_tree_at(trigger_index, sigma, state.round_seed(), T)
    add_to_tree(state.tree, trigger_index, float(state.cumulative_count - state.inserted_count))
    state.inserted_count = state.cumulative_count
    return True


def test_threshold(state: KeySelectionState, trigger_index: int, mu: float, tau_fn: TauFn) -> SelectionOutcome:
    """Selected iff q̂ > mu + τ at trigger_index (strict)."""
    if state.tree is None:
        raise StateError(f"key {state.key!r} has no selection tree at trigger {trigger_index}")
    if trigger_index >= state.tree.next_leaf:
        raise SequencingError(f"key {state.key!r}: leaf {trigger_index} not inserted yet")

    q_hat = float(all_prefix_estimates(state.tree)[trigger_index - 1])
    bound = float(mu + tau_fn(all_prefix_variances(state.tree))[trigger_index - 1])
    selected = q_hat > bound
    if selected:
        state.selected_at = trigger_index
    return SelectionOutcome(selected=selected, noisy_count=q_hat, trigger_index=trigger_index, threshold=bound)


# keep pytest from collecting the operation above as a test
test_threshold.__test__ = False


def restart_after_selection(state: KeySelectionState, C: int) -> KeySelectionState:
    """Close the round: clear users, drop the tree, and retire the key after C rounds."""
    if state.selected_at is None or state.selected_at != state.last_trigger:
        raise StateError(f"key {state.key!r} was not selected at trigger {state.last_trigger}")

    state.rounds_completed += 1
    state.round_users = set()
    state.cumulative_count = 0
    state.inserted_count = 0
    state.tree = None
    state.selected_at = None
    if state.rounds_completed >= C:
        state.active = False
    return state


def simulate_empty_triggers(
    state: KeySelectionState,
    mu: float,
    tau_fn: TauFn,
    horizon: Optional[int] = None,
) -> Optional[int]:
    """
    First trigger after the last observed one at which the key would be
    selected if no further records arrive, or None within the tree's horizon.
    """
    if not state.active or state.tree is None:
        return None
    start = state.tree.next_leaf
    if start > state.tree.leaf_count:
        return None

    estimates = all_prefix_estimates(state.tree)[start - 1:]
    bounds = mu + tau_fn(all_prefix_variances(state.tree))[start - 1:]
    hits = np.flatnonzero(estimates > bounds)
    if not hits.size:
        return None
    trigger = int(start + hits[0])
    return trigger if horizon is None or trigger <= horizon else None
