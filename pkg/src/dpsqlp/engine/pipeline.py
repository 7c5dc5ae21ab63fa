#!/usr/bin/env python3
"""
The micro-batch pipeline.

Per trigger: bound user contributions, merge records into per-key buffers,
run key selection on the batch's keys plus keys whose predicted release is
due, release the selected keys, and predict the next empty-key release for
the rest. Each trigger commits atomically to the state store, so a rerun after
a crash resumes at the first uncommitted trigger.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional

from ulid import ULID

from dpsqlp.bounding import Record, bound_contributions
from dpsqlp.engine.config import PipelineConfig
from dpsqlp.engine.plan import PrivacyPlan, build_plan
from dpsqlp.engine.prediction import handle_due_predictions, predict_empty_release
from dpsqlp.engine.state import KeyState
from dpsqlp.engine.state_store import FaultHook, StateStore
from dpsqlp.engine.windowing import MicroBatch, assign_windows, micro_batches
from dpsqlp.errors import StateError
from dpsqlp.keyselect import observe_key, open_gate, restart_after_selection, test_threshold
from dpsqlp.keyselect.selection import TauFn
from dpsqlp.logs import get_logger
from dpsqlp.perturb import accumulate_delta, release

logger = get_logger(__name__)

FAULT_BOUNDARIES = (
    "before_bounding",
    "after_bounding",
    "after_grouping",
    "after_selection",
    "before_commit",
    "mid_commit",
    "after_commit",
)


@dataclass
class RunReport:
    run_id: str
    engine: str
    config_digest: str
    prediction: bool
    records_in: int = 0
    records_late: int = 0
    records_out_of_range: int = 0
    records_admitted: int = 0
    records_dropped_by_bounding: int = 0
    windows: int = 0
    triggers: int = 0
    releases: int = 0
    keys_released: int = 0
    key_reads: int = 0
    key_writes: int = 0
    budget: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineResult:
    releases: List[dict]
    report: RunReport


class _Step:
    """One trigger's processing against an open store step."""

    def __init__(self, store: StateStore, cfg: PipelineConfig, plan: PrivacyPlan, tau: TauFn, hook: Optional[FaultHook]):
        self.store = store
        self.cfg = cfg
        self.plan = plan
        self.tau = tau
        self.hook = hook

    def fire(self, boundary: str, step: int) -> None:
        if self.hook is not None:
            self.hook(boundary, step)

    def run(self, batch: MicroBatch, counters: dict) -> None:
        cfg, store = self.cfg, self.store
        i, step = batch.trigger_index, batch.step(cfg.T)

        store.start_window(batch.window)
        store.begin(step)
        self.fire("before_bounding", step)

        kept = bound_contributions(batch.records, store.user_table, cfg.sensitivity)
        counters["records_admitted"] += len(kept)
        counters["records_dropped_by_bounding"] += len(batch.records) - len(kept)
        self.fire("after_bounding", step)

        by_key: Dict[str, List[Record]] = {}
        for record in kept:
            by_key.setdefault(record.key, []).append(record)

        states: Dict[str, KeyState] = {}
        for key, records in by_key.items():
            state = store.get_key(key) or KeyState.new(key, cfg.seed, batch.window)
            accumulate_delta(state.aggregation, records, cfg.columns)
            states[key] = state
        self.fire("after_grouping", step)

        if cfg.prediction:
            for key in sorted(handle_due_predictions(store, i) - by_key.keys()):
                states[key] = store.get_key(key)
        else:
            for state in store.live_keys():
                states.setdefault(state.key, state)

        out = []
        for key in sorted(states):
            out.extend(self._test_and_release(states[key], i, by_key.get(key)))
        self.fire("after_selection", step)

        store.append_releases([{"window": batch.window, **r.to_dict()} for r in out])
        counters["triggers"] += 1
        counters["releases"] += len(out)
        self.fire("before_commit", step)
        store.commit(counters)
        self.fire("after_commit", step)

        logger.debug(
            "step %d: %d records, %d keys in batch, %d tested, %d releases",
            step, len(batch.records), len(by_key), len(states), len(out),
        )

    def _test_and_release(self, state: KeyState, i: int, records: Optional[List[Record]]):
        cfg, plan = self.cfg, self.plan
        selection = state.selection
        state.predicted_release = None

        if state.aggregation.release_count >= cfg.release_capacity:
            # Tree full: later records stay buffered and the last release stands.
            self.store.put_key(state)
            return []

        if records is not None and not selection.active:
            selected = True
        elif records is not None:
            observe_key(selection, i, [r.user_id for r in records])
            selected = (
                open_gate(selection, i, cfg.mu, plan.selection_sigma, cfg.T)
                and test_threshold(selection, i, cfg.mu, self.tau).selected
            )
        else:
            observe_key(selection, i, ())
            selected = test_threshold(selection, i, cfg.mu, self.tau).selected

        out = []
        if selected:
            out = release(state.aggregation, i, True, plan.column_sigmas, cfg.release_capacity)
            if selection.active:
                restart_after_selection(selection, cfg.C)
        elif cfg.prediction:
            state.predicted_release = predict_empty_release(state, i, cfg.T, cfg.mu, self.tau)

        self.store.put_key(state)
        return out


def _attach_run(store: StateStore, cfg: PipelineConfig, engine: str) -> dict:
    digest = cfg.digest()
    run = store.meta.get("run")
    if run is None:
        run = {"run_id": str(ULID()), "config_digest": digest, "engine": engine}
        store.meta["run"] = run
    elif run["config_digest"] != digest:
        raise StateError(
            f"state directory belongs to run {run['run_id']} with a different configuration"
        )
    return run


def run_pipeline(
    stream: Iterable[Record],
    cfg: PipelineConfig,
    store: Optional[StateStore] = None,
    fault_hook: Optional[FaultHook] = None,
) -> PipelineResult:
    """
    Run the engine over a record stream. With a state directory configured,
    committed triggers are skipped, so rerunning the same stream after a
    failure produces the same releases as an uninterrupted run.
    """
    cfg.validate()
    plan = build_plan(cfg)
    tau = plan.tau_fn()
    assignment = assign_windows(stream, cfg.window)

    own_store = store is None
    if own_store:
        store = StateStore.open(cfg.state_dir)
    store.fault_hook = fault_hook
    run = _attach_run(store, cfg, "dpsqlp")

    counters = {"records_admitted": 0, "records_dropped_by_bounding": 0, "triggers": 0, "releases": 0}
    counters.update(store.counters)
    if store.last_committed:
        logger.info("resuming run %s after step %d", run["run_id"], store.last_committed)

    processor = _Step(store, cfg, plan, tau, fault_hook)
    for window, records in assignment.windows.items():
        for batch in micro_batches(records, window, cfg.window, cfg.T):
            if batch.step(cfg.T) <= store.last_committed:
                continue
            processor.run(batch, counters)
            store.maybe_checkpoint(cfg.checkpoint_every)

    releases = list(store.releases)
    report = RunReport(
        run_id=run["run_id"],
        engine="dpsqlp",
        config_digest=run["config_digest"],
        prediction=cfg.prediction,
        records_in=assignment.assigned + assignment.late + assignment.out_of_range,
        records_late=assignment.late,
        records_out_of_range=assignment.out_of_range,
        records_admitted=counters["records_admitted"],
        records_dropped_by_bounding=counters["records_dropped_by_bounding"],
        windows=len(assignment.windows),
        triggers=counters["triggers"],
        releases=len(releases),
        keys_released=len({(r["window"], r["key"]) for r in releases}),
        key_reads=store.stats.key_reads,
        key_writes=store.stats.key_writes,
        budget=plan.to_dict(),
    )
    if own_store:
        store.close()
    logger.info("run %s finished: %d releases over %d triggers", report.run_id, report.releases, report.triggers)
    return PipelineResult(releases=releases, report=report)
