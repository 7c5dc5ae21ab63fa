"""
Streaming baselines built from the one-shot histogram.

Repeated: every trigger reruns the one-shot query on the whole prefix, with a
per-run budget whose optimal composition over T runs fits the total.
Incremental: every micro-batch gets its own one-shot query at the full budget
(batches are disjoint after global bounding) and outputs are summed.
"""

from dataclasses import replace
from typing import Iterable

from ulid import ULID

from dpsqlp.accountant import DpBudget, optimal_composition, per_round_budget
from dpsqlp.baselines.one_shot import OneShotConfig, one_shot_dp_histogram
from dpsqlp.bounding import Record, UserBudgetTable, bound_contributions
from dpsqlp.engine.config import PipelineConfig
from dpsqlp.engine.pipeline import PipelineResult, RunReport
from dpsqlp.engine.windowing import assign_windows, micro_batches
from dpsqlp.logs import get_logger
from dpsqlp.seeding import make_rng

logger = get_logger(__name__)


def per_run_budget(total: DpBudget, runs: int) -> DpBudget:
    return per_round_budget(total, runs, "optimal")


def _one_shot_config(cfg: PipelineConfig, budget: DpBudget) -> OneShotConfig:
    return OneShotConfig(
        budget=budget,
        C=cfg.C,
        L_m=cfg.L_m,
        beta=cfg.beta,
        mu=cfg.mu,
        columns=cfg.columns,
        key_selection_fraction=cfg.key_selection_fraction,
        key_selection_delta_fraction=cfg.key_selection_delta_fraction,
        noise_free=cfg.noiseless,
    )


def _releases(window: int, trigger: int, histogram: dict[str, dict[str, float]]) -> list[dict]:
    return [
        {"window": window, "trigger": trigger, "key": key, "column": column, "value": value}
        for key in sorted(histogram)
        for column, value in histogram[key].items()
    ]


def _run(stream: Iterable[Record], cfg: PipelineConfig, engine: str, budget: DpBudget, cumulative_prefix: bool):
    cfg.validate()
    one_shot = _one_shot_config(cfg, budget)
    assignment = assign_windows(stream, cfg.window)
    releases: list[dict] = []
    admitted = dropped = triggers = 0

    for window, records in assignment.windows.items():
        table = UserBudgetTable()
        prefix: list[Record] = []
        running: dict[str, dict[str, float]] = {}
        for batch in micro_batches(records, window, cfg.window, cfg.T):
            kept = bound_contributions(batch.records, table, cfg.sensitivity)
            admitted += len(kept)
            dropped += len(batch.records) - len(kept)
            triggers += 1
            rng = make_rng(cfg.seed, engine, window, batch.trigger_index)

            if cumulative_prefix:
                prefix.extend(kept)
                histogram = one_shot_dp_histogram(prefix, one_shot, rng)
            else:
                for key, values in one_shot_dp_histogram(kept, one_shot, rng).items():
                    acc = running.setdefault(key, {})
                    for column, value in values.items():
                        acc[column] = acc.get(column, 0.0) + value
                histogram = {k: running[k] for k in running}
            releases.extend(_releases(window, batch.trigger_index, histogram))

    report = RunReport(
        run_id=str(ULID()),
        engine=engine,
        config_digest=cfg.digest(),
        prediction=False,
        records_in=assignment.assigned + assignment.late + assignment.out_of_range,
        records_late=assignment.late,
        records_out_of_range=assignment.out_of_range,
        records_admitted=admitted,
        records_dropped_by_bounding=dropped,
        windows=len(assignment.windows),
        triggers=triggers,
        releases=len(releases),
        keys_released=len({(r["window"], r["key"]) for r in releases}),
        budget={"total": cfg.total_budget.to_dict(), "per_run": budget.to_dict()},
    )
    logger.info("%s finished: %d releases over %d triggers", engine, len(releases), triggers)
    return PipelineResult(releases=releases, report=report)


def baseline_repeated(stream: Iterable[Record], cfg: PipelineConfig, T: int | None = None) -> PipelineResult:
    """One-shot histogram of the growing prefix at every trigger."""
    if T is not None and T != cfg.T:
        cfg = replace(cfg, T=T)
    budget = per_run_budget(cfg.total_budget, cfg.T)
    if cfg.T > 1:
        spent = optimal_composition(budget, cfg.T, cfg.delta / 2.0)
        logger.debug("baseline1 per-run %s composes to %s", budget, spent)
    return _run(stream, cfg, "baseline1", budget, cumulative_prefix=True)


def baseline_incremental(stream: Iterable[Record], cfg: PipelineConfig, T: int | None = None) -> PipelineResult:
    """Independent one-shot histogram per micro-batch, summed over batches."""
    if T is not None and T != cfg.T:
        cfg = replace(cfg, T=T)
    return _run(stream, cfg, "baseline2", cfg.total_budget, cumulative_prefix=False)
