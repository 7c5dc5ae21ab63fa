"""
Record ingestion from CSV and JSON-lines files.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Optional

from dpsqlp.bounding import Record
from dpsqlp.engine.config import parse_instant
from dpsqlp.errors import IngestError, InvalidParameterError
from dpsqlp.logs import get_logger

logger = get_logger(__name__)

Format = Literal["csv", "jsonl"]
OnError = Literal["abort", "skip"]


@dataclass(frozen=True)
class ColumnMapping:
    """Source field names for each record field."""
    key: str = "key"
    value: str = "value"
    timestamp: str = "timestamp"
    user_id: str = "user_id"

    @property
    def fields(self) -> tuple[str, str, str, str]:
        return (self.key, self.value, self.timestamp, self.user_id)

    @classmethod
    def parse(cls, text: Optional[str]) -> "ColumnMapping":
        """'key=subreddit,user_id=author' style overrides."""
        if not text:
            return cls()
        overrides = {}
        for part in text.split(","):
            name, _, source = part.partition("=")
            if name not in cls.__dataclass_fields__ or not source:
                raise InvalidParameterError(f"bad column mapping entry {part!r}")
            overrides[name] = source
        return cls(**overrides)


def _infer_format(path: Path) -> Format:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    raise InvalidParameterError(f"cannot infer input format from {path.name}")


def _to_record(row: dict, mapping: ColumnMapping, count_users: bool, line: int) -> Record:
    try:
        key = str(row[mapping.key])
        user_id = str(row[mapping.user_id])
        raw_ts = row[mapping.timestamp]
        value = 1.0 if count_users else float(row[mapping.value])
    except KeyError as e:
        raise IngestError(f"missing field {e.args[0]!r}", line) from e
    except (TypeError, ValueError) as e:
        raise IngestError(f"non-numeric value {row.get(mapping.value)!r}", line) from e
    if not math.isfinite(value):
        raise IngestError(f"non-finite value {row.get(mapping.value)!r}", line)

    try:
        timestamp = parse_instant(raw_ts)
    except InvalidParameterError as e:
        raise IngestError(str(e), line) from e
    if not key:
        raise IngestError("empty key", line)
    return Record(key=key, value=value, timestamp=timestamp, user_id=user_id)


def _csv_rows(path: Path, mapping: ColumnMapping) -> Iterable[tuple[int, dict]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = None
        for row in reader:
            if not row:
                continue
            if header is None and reader.line_num == 1 and mapping.key in row:
                header = row
                continue
            names = header or list(mapping.fields)
            if len(row) != len(names):
                yield reader.line_num, {"__error__": f"expected {len(names)} fields, got {len(row)}"}
                continue
            yield reader.line_num, dict(zip(names, row))


def _jsonl_rows(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except ValueError as e:
                yield line_number, {"__error__": f"invalid JSON: {e}"}
                continue
            if not isinstance(row, dict):
                yield line_number, {"__error__": "row is not a JSON object"}
                continue
            yield line_number, row


def ingest(
    path: Path,
    fmt: Optional[Format] = None,
    mapping: Optional[ColumnMapping] = None,
    on_error: OnError = "abort",
    count_users: bool = False,
) -> list[Record]:
    """
    Read records from a CSV or JSON-lines file. CSV files may carry a header
    naming the mapped fields; otherwise columns are key, value, timestamp,
    user_id. count_users maps every record to value 1.
    """
    path = Path(path)
    fmt = fmt or _infer_format(path)
    mapping = mapping or ColumnMapping()
    if on_error not in ("abort", "skip"):
        raise InvalidParameterError(f"on_error must be 'abort' or 'skip', got {on_error!r}")

    if not path.is_file():
        raise IngestError(f"no such input file: {path}")

    rows = _csv_rows(path, mapping) if fmt == "csv" else _jsonl_rows(path)
    records: list[Record] = []
    skipped = 0
    for line, row in rows:
        try:
            if "__error__" in row:
                raise IngestError(row["__error__"], line)
            records.append(_to_record(row, mapping, count_users, line))
        except IngestError as e:
            if on_error == "abort":
                raise
            skipped += 1
            logger.warning("skipping row: %s", e)

    logger.info("ingested %d records from %s (%d skipped)", len(records), path, skipped)
    return records


def write_records(path: Path, records: Iterable[Record], fmt: Optional[Format] = None) -> int:
    path = Path(path)
    fmt = fmt or _infer_format(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        if fmt == "csv":
            writer = csv.writer(f)
            writer.writerow(ColumnMapping().fields)
            for r in records:
                writer.writerow([r.key, repr(r.value), repr(r.timestamp), r.user_id])
                count += 1
        else:
            for r in records:
                f.write(json.dumps({"key": r.key, "value": r.value, "timestamp": r.timestamp, "user_id": r.user_id}) + "\n")
                count += 1
    return count
