"""
Evaluation harness: synthetic data, ingestion, ground truth and metrics.
"""

from dpsqlp.bench.experiment import (
    ENGINES,
    artifact_name,
    average_rows,
    compare,
    run_engine,
    score,
    sweep_contribution_bound,
    write_rows_csv,
)
from dpsqlp.bench.ingest import ColumnMapping, ingest, write_records
from dpsqlp.bench.metrics import UtilityReport, histogram_at, utility_metrics
from dpsqlp.bench.synthetic import generate_synthetic
from dpsqlp.bench.truth import final_truth, ground_truth, ground_truth_sql
from dpsqlp.bench.zipf import ZipfMandelbrotDist, sample_zipf_mandelbrot

__all__ = [
    "ENGINES",
    "ColumnMapping",
    "UtilityReport",
    "ZipfMandelbrotDist",
    "artifact_name",
    "average_rows",
    "compare",
    "final_truth",
    "generate_synthetic",
    "ground_truth",
    "ground_truth_sql",
    "histogram_at",
    "ingest",
    "run_engine",
    "sample_zipf_mandelbrot",
    "score",
    "sweep_contribution_bound",
    "utility_metrics",
    "write_records",
    "write_rows_csv",
]
