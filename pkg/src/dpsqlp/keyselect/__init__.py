from dpsqlp.keyselect.selection import (
    KeySelectionState,
    SelectionOutcome,
    mu_prefilter,
    observe_key,
    open_gate,
    restart_after_selection,
    simulate_empty_triggers,
    spawn_tree_at,
    test_threshold,
    threshold_fn,
)

__all__ = [
    "KeySelectionState",
    "SelectionOutcome",
    "mu_prefilter",
    "observe_key",
    "open_gate",
    "restart_after_selection",
    "simulate_empty_triggers",
    "spawn_tree_at",
    "test_threshold",
    "threshold_fn",
]
