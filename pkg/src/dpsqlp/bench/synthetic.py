"""
Synthetic keyed streams: Zipf-Mandelbrot records per user and keys per
record, spread uniformly over one event-time window.
"""

from typing import Optional

import numpy as np

from dpsqlp.bench.zipf import KEY_DIST_PARAMS, RECORD_COUNT_DIST, ZipfMandelbrotDist
from dpsqlp.bounding import Record
from dpsqlp.engine.config import WindowSpec
from dpsqlp.errors import InvalidParameterError
from dpsqlp.logs import get_logger
from dpsqlp.seeding import make_rng

logger = get_logger(__name__)

DESK_USERS = 10_000
DESK_KEY_SPACE = 1_000


def generate_synthetic(
    users: int,
    record_dist: ZipfMandelbrotDist = RECORD_COUNT_DIST,
    key_dist: Optional[ZipfMandelbrotDist] = None,
    key_space: int = DESK_KEY_SPACE,
    seed: int = 0,
    window: Optional[WindowSpec] = None,
) -> list[Record]:
    """
    Every user draws a record count, every record draws a key in [1, key_space].
    Records get value 1 and a uniform timestamp in the window, and come back
    sorted by timestamp.
    """
    if users < 0:
        raise InvalidParameterError(f"users must be >= 0, got {users}")
    if users == 0:
        return []
    window = window or WindowSpec()
    if key_dist is None:
        key_dist = ZipfMandelbrotDist(support=key_space, **KEY_DIST_PARAMS)
    elif key_dist.support != key_space:
        key_dist = ZipfMandelbrotDist(q=key_dist.q, s=key_dist.s, support=key_space)

    rng = make_rng(seed, "synthetic")
    counts = record_dist.sample(rng, users)
    total = int(counts.sum())
    keys = key_dist.sample(rng, total)
    owners = np.repeat(np.arange(users), counts)
    times = window.start + rng.random(total) * window.length

    order = np.argsort(times, kind="stable")
    stream = [
        Record(key=f"k{keys[j]}", value=1.0, timestamp=float(times[j]), user_id=f"u{owners[j]}")
        for j in order
    ]
    logger.info("generated %d records for %d users over %d keys", total, users, key_space)
    return stream
