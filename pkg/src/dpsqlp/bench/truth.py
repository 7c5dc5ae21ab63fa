"""
Exact ground-truth histograms, computed two independent ways.

Both return {(window, trigger): {key: cumulative total}} over the raw
(unbounded, unclamped) records that windowing keeps, for every trigger of
every window and every key seen up to that trigger.
"""

from typing import Iterable

import duckdb

from dpsqlp.bounding import Record
from dpsqlp.engine.config import WindowSpec
from dpsqlp.engine.windowing import assign_windows, micro_batches

TruthTable = dict[tuple[int, int], dict[str, float]]


def ground_truth(stream: Iterable[Record], window: WindowSpec, triggers: int) -> TruthTable:
    """Hash aggregation over the engine's own micro-batches."""
    out: TruthTable = {}
    for w, records in assign_windows(stream, window).windows.items():
        running: dict[str, float] = {}
        for batch in micro_batches(records, w, window, triggers):
            for record in batch.records:
                running[record.key] = running.get(record.key, 0.0) + record.value
            out[(w, batch.trigger_index)] = dict(running)
    return out


def ground_truth_sql(stream: Iterable[Record], window: WindowSpec, triggers: int) -> TruthTable:
    """The same table from a DuckDB window-function query."""
    triggers = int(triggers)
    kept = [r for records in assign_windows(stream, window).windows.values() for r in records]
    out: TruthTable = {}
    if not kept:
        return out

    conn = duckdb.connect(":memory:")
    try:
        conn.execute("CREATE TABLE records (key VARCHAR, value DOUBLE, ts DOUBLE)")
        conn.executemany("INSERT INTO records VALUES (?, ?, ?)", [(r.key, r.value, r.timestamp) for r in kept])
        rows = conn.execute(f"""
            WITH placed AS (
                SELECT key, value,
                       CAST(floor((ts - ?) / ?) AS BIGINT) AS w,
                       ts
                FROM records
            ),
            batched AS (
                SELECT key, value, w,
                       GREATEST(LEAST(CAST(floor((ts - (? + w * ?)) / (? / {triggers})) AS BIGINT), {triggers} - 1), 0) + 1 AS trig
                FROM placed
            ),
            per_trigger AS (
                SELECT w, key, trig, SUM(value) AS total
                FROM batched
                GROUP BY w, key, trig
            ),
            cumulative AS (
                SELECT w, key, trig,
                       SUM(total) OVER (PARTITION BY w, key ORDER BY trig) AS running,
                       LEAD(trig, 1, {triggers} + 1) OVER (PARTITION BY w, key ORDER BY trig) AS next_trig
                FROM per_trigger
            )
            SELECT c.w, t.trig, c.key, c.running
            FROM cumulative c
            JOIN range(1, {triggers} + 1) t(trig) ON t.trig >= c.trig AND t.trig < c.next_trig
            ORDER BY c.w, t.trig, c.key
        """, (
            window.start, window.length,
            window.start, window.length, window.length,
        )).fetchall()
        windows = conn.execute("""
            SELECT DISTINCT CAST(floor((ts - ?) / ?) AS BIGINT) FROM records
        """, (window.start, window.length)).fetchall()
    finally:
        conn.close()

    for (w,) in windows:
        for i in range(1, triggers + 1):
            out[(int(w), i)] = {}
    for w, trig, key, running in rows:
        out[(int(w), int(trig))][key] = float(running)
    return out


def final_truth(table: TruthTable) -> dict[tuple[int, str], float]:
    """Totals at each window's last trigger, keyed by (window, key)."""
    last: dict[int, int] = {}
    for w, i in table:
        last[w] = max(last.get(w, 0), i)
    return {(w, key): value for w, i in last.items() for key, value in table[(w, i)].items()}
