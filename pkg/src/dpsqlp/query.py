#!/usr/bin/env python3
"""
Console views over the results store.
"""

import json
from typing import Optional

from dpsqlp.storage import ResultsStore


def show_stats(db: ResultsStore) -> None:
    """Record counts by kind."""
    print("=== Results Statistics ===")
    counts = db.stats()
    print(f"Total records: {sum(counts.values())}")
    for kind, count in counts.items():
        print(f"  {kind}: {count}")


def show_recent(db: ResultsStore, limit: int = 10, kind: Optional[str] = None) -> None:
    label = kind or "records"
    print(f"\n=== Recent {limit} {label} ===")
    rows = db.recent(kind=kind, limit=limit)
    if not rows:
        print("  No results")
        return
    for row in rows:
        data = row["data"]
        engine = data.get("engine") or row["meta"].get("engine", "")
        summary = ", ".join(f"{k}={data[k]}" for k in ("releases", "retained_keys", "l2", "C") if k in data)
        print(f"  {row['created_at']} | {row['kind']:15} | {row['run_id'] or '-':26} | {engine:9} {summary}")


def show_run(db: ResultsStore, run_id: str) -> None:
    print(f"\n=== Run Details: {run_id} ===")
    rows = db.get_run(run_id)
    if not rows:
        print("  Run not found")
        return
    for row in rows:
        print(f"  [{row['kind']}] {row['created_at']}")
        print("    " + json.dumps(row["data"], indent=2, sort_keys=True).replace("\n", "\n    "))
        if row["meta"]:
            print(f"    meta: {json.dumps(row['meta'], sort_keys=True)}")
