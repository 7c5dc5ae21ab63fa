"""
Experiment orchestration: run an engine, score it against the ground truth,
compare engines on one stream, and sweep the contribution bound.
"""

import csv
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from slugify import slugify

from dpsqlp.baselines import baseline_incremental, baseline_repeated
from dpsqlp.bench.metrics import UtilityReport, histogram_at, utility_metrics
from dpsqlp.bench.truth import final_truth, ground_truth
from dpsqlp.bounding import Record
from dpsqlp.engine import PipelineConfig, PipelineResult, run_pipeline
from dpsqlp.errors import InvalidParameterError
from dpsqlp.logs import get_logger
from dpsqlp.seeding import derive_seed
from dpsqlp.storage import ResultsStore

logger = get_logger(__name__)

ENGINES = ("dpsqlp", "baseline1", "baseline2")


def run_engine(engine: str, stream: Sequence[Record], cfg: PipelineConfig) -> PipelineResult:
    if engine == "dpsqlp":
        return run_pipeline(stream, cfg)
    if engine == "baseline1":
        return baseline_repeated(stream, cfg)
    if engine == "baseline2":
        return baseline_incremental(stream, cfg)
    raise InvalidParameterError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def score(engine: str, releases: Iterable[dict], truth: dict, T: int, column: str = "value") -> UtilityReport:
    """
    Utility at the final trigger. The repeated baseline republishes a full
    histogram per trigger, so only its last output counts; the other engines
    keep each key's latest release.
    """
    histogram = histogram_at(releases, column, trigger=T, carry_forward=engine != "baseline1")
    return utility_metrics(histogram, truth)


def compare(
    stream: Sequence[Record],
    cfg: PipelineConfig,
    engines: Sequence[str] = ENGINES,
    results: Optional[ResultsStore] = None,
) -> dict[str, dict]:
    """Run every engine on the same stream and score each at the final trigger."""
    stream = list(stream)
    cfg = replace(cfg, state_dir=None)
    truth = final_truth(ground_truth(stream, cfg.window, cfg.T))

    out = {}
    for engine in engines:
        result = run_engine(engine, stream, cfg)
        utility = score(engine, result.releases, truth, cfg.T)
        out[engine] = {"report": result.report.to_dict(), "utility": utility.to_dict()}
        logger.info("%s: %s", engine, utility)
        if results is not None:
            results.store_record("run-report", result.report.to_dict(), run_id=result.report.run_id)
            results.store_record(
                "utility-report",
                utility.to_dict(),
                run_id=result.report.run_id,
                meta={"engine": engine, "T": cfg.T, "C": cfg.C},
            )
    return out


def sweep_contribution_bound(
    stream: Sequence[Record],
    cfg: PipelineConfig,
    C_values: Sequence[int],
    engine: str = "dpsqlp",
    results: Optional[ResultsStore] = None,
) -> list[dict]:
    """One run per C with a fresh seed; one row of utility metrics per C."""
    if not C_values:
        raise InvalidParameterError("C_values must not be empty")
    stream = list(stream)
    truth = final_truth(ground_truth(stream, cfg.window, cfg.T))

    rows = []
    for C in C_values:
        run_cfg = replace(cfg, C=int(C), seed=derive_seed(cfg.seed, "sweep", C), state_dir=None)
        result = run_engine(engine, stream, run_cfg)
        utility = score(engine, result.releases, truth, run_cfg.T)
        row = {"engine": engine, "C": int(C), **utility.to_dict()}
        rows.append(row)
        logger.info("sweep C=%d: %s", C, utility)
        if results is not None:
            results.store_record("sweep-row", row, run_id=result.report.run_id, meta={"T": cfg.T})
    return rows


def average_rows(rows: Sequence[dict], by: str = "C") -> list[dict]:
    """Mean of every metric per value of `by`, in first-seen order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row[by], []).append(row)
    out = []
    for value, members in groups.items():
        merged = {by: value}
        for metric in ("retained_keys", "l_inf", "l1", "l2"):
            merged[metric] = sum(m[metric] for m in members) / len(members)
        out.append(merged)
    return out


def write_rows_csv(path: Path, rows: Sequence[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def artifact_name(kind: str, **params) -> str:
    """File-system safe artefact name, e.g. 'sweep-t-100-seed-3'."""
    parts = [kind] + [f"{k}-{v}" for k, v in sorted(params.items())]
    return slugify("-".join(parts))
