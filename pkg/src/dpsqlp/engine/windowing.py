"""
Event-time windowing and per-window micro-batching.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

from dpsqlp.bounding import Record
from dpsqlp.engine.config import WindowSpec
from dpsqlp.errors import InvalidParameterError
from dpsqlp.logs import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class MicroBatch:
    window: int
    trigger_index: int
    records: Tuple[Record, ...]

    def step(self, T: int) -> int:
        """Global, strictly increasing step number across windows."""
        return self.window * T + self.trigger_index


@dataclass
class WindowAssignment:
    windows: Dict[int, List[Record]] = field(default_factory=dict)
    late: int = 0
    out_of_range: int = 0

    @property
    def assigned(self) -> int:
        return sum(len(r) for r in self.windows.values())


def assign_windows(records: Iterable[Record], spec: WindowSpec) -> WindowAssignment:
    """
    Route each record to the window with t_s <= t < t_e. In input order, a record
    whose window closed more than allowed_lateness before the latest timestamp
    seen is dropped as late.
    """
    out = WindowAssignment()
    watermark = -math.inf
    for record in records:
        w = spec.window_of(record.timestamp)
        if w < 0:
            out.out_of_range += 1
            continue
        _, end = spec.bounds(w)
        if spec.allowed_lateness is not None and end + spec.allowed_lateness <= watermark:
            out.late += 1
            continue
        watermark = max(watermark, record.timestamp)
        out.windows.setdefault(w, []).append(record)

    out.windows = dict(sorted(out.windows.items()))
    if out.late or out.out_of_range:
        logger.warning("dropped %d late and %d out-of-range records", out.late, out.out_of_range)
    return out


def micro_batches(records: Iterable[Record], window: int, spec: WindowSpec, T: int) -> List[MicroBatch]:
    """
    Split one window into T triggers of equal duration. Every trigger yields a
    batch, possibly empty; records keep their input order inside a batch.
    """
    if T < 1:
        raise InvalidParameterError(f"T must be >= 1, got {T}")
    start, _ = spec.bounds(window)
    width = spec.length / T
    buckets: List[List[Record]] = [[] for _ in range(T)]
    for record in records:
        i = min(math.floor((record.timestamp - start) / width), T - 1)
        buckets[max(i, 0)].append(record)
    return [MicroBatch(window, i + 1, tuple(b)) for i, b in enumerate(buckets)]
