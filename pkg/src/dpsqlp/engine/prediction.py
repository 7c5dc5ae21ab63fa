"""
Empty-key release prediction.

A key with a live selection tree that receives no more records would still be
released once its noise alone carries the prefix count over the threshold.
Tree noise is deterministic, so that trigger is known in advance and the
engine only needs to revisit the key then instead of scanning every key.
"""

from typing import Optional, Set

from dpsqlp.engine.state import KeyState
from dpsqlp.engine.state_store import StateStore
from dpsqlp.keyselect import simulate_empty_triggers
from dpsqlp.keyselect.selection import TauFn


def predict_empty_release(key_state: KeyState, current_trigger: int, T: int, mu: float, tau_fn: TauFn) -> Optional[int]:
    """First trigger in (current_trigger, T] at which the key would pass with no new data."""
    trigger = simulate_empty_triggers(key_state.selection, mu, tau_fn, horizon=T)
    if trigger is None or trigger <= current_trigger:
        return None
    return trigger


def handle_due_predictions(store: StateStore, trigger_index: int) -> Set[str]:
    """Keys predicted to release at trigger_index."""
    return store.due_at(trigger_index)
