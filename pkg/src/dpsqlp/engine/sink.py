"""
Release and report output files.
"""

import json
from pathlib import Path
from typing import Iterable, List

from dpsqlp.logs import get_logger

logger = get_logger(__name__)


def write_releases(path: Path, releases: Iterable[dict]) -> int:
    """Write releases as JSON lines; returns the number written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for release in releases:
            f.write(json.dumps(release, sort_keys=True) + "\n")
            count += 1
    logger.info("wrote %d releases to %s", count, path)
    return count


def read_releases(path: Path) -> List[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_json(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
