#!/usr/bin/env python3
"""
DuckDB implementation of the results store.
All results live in one records table keyed by ULID and tagged by kind.
"""

import json
import os
from datetime import datetime, timezone
from typing import Dict, List, Optional

import duckdb
from ulid import ULID

from dpsqlp.storage.db_interface import ResultsStore

DEFAULT_DB_PATH = "data/dpsqlp.duckdb"


class DuckDBResultsStore(ResultsStore):
    """DuckDB-backed results store."""

    def __init__(self, db_path: str = DEFAULT_DB_PATH):
        if db_path != ":memory:":
            directory = os.path.dirname(db_path)
            if directory:
                os.makedirs(directory, exist_ok=True)

        self.db_path = db_path
        self.conn = duckdb.connect(db_path)
        self._init_schema()

    def _init_schema(self) -> None:
        self.conn.execute("""
            CREATE TABLE IF NOT EXISTS records (
                id VARCHAR PRIMARY KEY,
                kind VARCHAR NOT NULL,
                run_id VARCHAR,
                created_at TIMESTAMP NOT NULL,
                data JSON,
                meta JSON
            )
        """)
        self.conn.execute("CREATE INDEX IF NOT EXISTS idx_run_kind ON records (run_id, kind)")

    def store_record(self, kind: str, data: Dict, run_id: Optional[str] = None, meta: Optional[Dict] = None) -> str:
        record_id = str(ULID())
        self.conn.execute("""
            INSERT INTO records (id, kind, run_id, created_at, data, meta)
            VALUES (?, ?, ?, ?, ?, ?)
        """, (
            record_id,
            kind,
            run_id,
            datetime.now(timezone.utc).replace(tzinfo=None),
            json.dumps(data, default=str),
            json.dumps(meta or {}, default=str),
        ))
        return record_id

    def _rows(self, rows) -> List[Dict]:
        return [
            {
                "id": row[0],
                "kind": row[1],
                "run_id": row[2],
                "created_at": str(row[3])[:19],
                "data": json.loads(row[4]) if row[4] else {},
                "meta": json.loads(row[5]) if row[5] else {},
            }
            for row in rows
        ]

    def get_run(self, run_id: str) -> List[Dict]:
        rows = self.conn.execute("""
            SELECT id, kind, run_id, created_at, data, meta FROM records
            WHERE run_id = ?
            ORDER BY created_at, id
        """, (run_id,)).fetchall()
        return self._rows(rows)

    def recent(self, kind: Optional[str] = None, limit: int = 10) -> List[Dict]:
        if kind:
            rows = self.conn.execute("""
                SELECT id, kind, run_id, created_at, data, meta FROM records
                WHERE kind = ?
                ORDER BY created_at DESC, id DESC
                LIMIT ?
            """, (kind, limit)).fetchall()
        else:
            rows = self.conn.execute("""
                SELECT id, kind, run_id, created_at, data, meta FROM records
                ORDER BY created_at DESC, id DESC
                LIMIT ?
            """, (limit,)).fetchall()
        return self._rows(rows)

    def stats(self) -> Dict[str, int]:
        rows = self.conn.execute("""
            SELECT kind, COUNT(*) AS count
            FROM records
            GROUP BY kind
            ORDER BY count DESC
        """).fetchall()
        return {kind: count for kind, count in rows}

    def health_check(self) -> bool:
        if self.conn is None:
            return False
        try:
            self.conn.execute("SELECT 1").fetchone()
            return True
        except duckdb.Error:
            return False

    def close(self) -> None:
        if getattr(self, "conn", None) is not None:
            self.conn.close()
            self.conn = None


def get_results_store(db_path: Optional[str] = None) -> ResultsStore:
    """Results store at db_path, else $DPSQLP_RESULTS_DB, else the local default."""
    return DuckDBResultsStore(db_path or os.getenv("DPSQLP_RESULTS_DB", DEFAULT_DB_PATH))
