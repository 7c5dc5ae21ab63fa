"""
Persistent engine state: the user budget table, the key table and the
prediction index, plus the release log.

Mutations are committed per trigger as a BEGIN / DATA / COMMIT group of framed
write-ahead-log entries (length, CRC32, JSON). A checkpoint writes a
checksummed snapshot atomically and truncates the log. Reopening replays
committed groups after the snapshot; an uncommitted or torn tail is dropped
with a warning, while a corrupt frame or snapshot raises RecoveryError.
"""

import hashlib
import json
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Set, Tuple

from dpsqlp.bounding import UserBudgetTable
from dpsqlp.engine.state import KeyState
from dpsqlp.errors import RecoveryError, SequencingError, StateError
from dpsqlp.logs import get_logger

logger = get_logger(__name__)

SNAPSHOT_NAME = "state.snapshot"
WAL_NAME = "state.wal"
SNAPSHOT_MAGIC = b"DPSQLPSS"
SNAPSHOT_VERSION = 1

_SNAPSHOT_HEADER = struct.Struct(">8sH32s")
_FRAME_HEADER = struct.Struct(">II")

FaultHook = Callable[[str, int], None]


@dataclass
class StoreStats:
    key_reads: int = 0
    key_writes: int = 0
    commits: int = 0
    checkpoints: int = 0


def _frame(entry: dict) -> bytes:
    body = json.dumps(entry, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _FRAME_HEADER.pack(len(body), zlib.crc32(body)) + body


def _read_frames(blob: bytes) -> Iterator[Tuple[int, dict]]:
    """Yield (end offset, entry) per complete frame; stop quietly at a torn tail."""
    offset = 0
    while offset < len(blob):
        if len(blob) - offset < _FRAME_HEADER.size:
            logger.warning("discarding torn write-ahead-log header at offset %d", offset)
            return
        length, crc = _FRAME_HEADER.unpack_from(blob, offset)
        start = offset + _FRAME_HEADER.size
        if start + length > len(blob):
            logger.warning("discarding torn write-ahead-log frame at offset %d", offset)
            return
        body = blob[start: start + length]
        if zlib.crc32(body) != crc:
            raise RecoveryError(f"write-ahead-log checksum mismatch at offset {offset}")
        try:
            entry = json.loads(body)
        except ValueError as e:
            raise RecoveryError(f"undecodable write-ahead-log entry at offset {offset}: {e}") from e
        offset = start + length
        yield offset, entry


class StateStore:
    """Engine state with optional on-disk persistence (path=None keeps it in memory)."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.user_table = UserBudgetTable()
        self.stats = StoreStats()
        self.releases: List[dict] = []
        self.meta: dict = {"window": None, "last_committed": 0, "counters": {}}
        self.fault_hook: Optional[FaultHook] = None

        self._keys: Dict[str, KeyState] = {}
        self._predictions: Dict[int, Set[str]] = {}
        self._predicted_for: Dict[str, int] = {}
        self._dirty_keys: Set[str] = set()
        self._pending_releases: List[dict] = []
        self._window_reset = False
        self._open_step: Optional[int] = None
        self._commits_since_checkpoint = 0
        self._wal = None

    # lifecycle

    @classmethod
    def open(cls, path: Optional[Path] = None) -> "StateStore":
        store = cls(path)
        if store.path is not None:
            store.path.mkdir(parents=True, exist_ok=True)
            store._recover()
            store._wal = open(store.path / WAL_NAME, "ab")
            logger.info(
                "opened state store at %s (last committed step %d, %d keys)",
                store.path, store.last_committed, len(store._keys),
            )
        return store

    def close(self) -> None:
        if self.path is not None and self._wal is not None:
            self.checkpoint()
            self._wal.close()
            self._wal = None
            logger.info("closed state store at %s", self.path)

    def __enter__(self) -> "StateStore":
        return self

    def __exit__(self, *exc) -> None:
        if exc[0] is None:
            self.close()
        elif self._wal is not None:
            # leave the log as written; reopening recovers the last commit
            self._wal.close()
            self._wal = None

    @property
    def last_committed(self) -> int:
        return self.meta["last_committed"]

    @property
    def window(self) -> Optional[int]:
        return self.meta["window"]

    @property
    def counters(self) -> dict:
        return self.meta["counters"]

    # key table

    def get_key(self, key: str) -> Optional[KeyState]:
        self.stats.key_reads += 1
        return self._keys.get(key)

    def put_key(self, state: KeyState) -> None:
        self.stats.key_writes += 1
        self._keys[state.key] = state
        self._dirty_keys.add(state.key)
        self._index_prediction(state.key, state.predicted_release)

    def live_keys(self) -> List[KeyState]:
        """Keys with an open selection tree, read in key order."""
        out = []
        for key in sorted(self._keys):
            state = self._keys[key]
            if state.selection.active and state.selection.tree is not None:
                self.stats.key_reads += 1
                out.append(state)
        return out

    def key_count(self) -> int:
        return len(self._keys)

    # prediction index

    def _index_prediction(self, key: str, trigger: Optional[int]) -> None:
        old = self._predicted_for.pop(key, None)
        if old is not None:
            bucket = self._predictions.get(old)
            if bucket is not None:
                bucket.discard(key)
                if not bucket:
                    del self._predictions[old]
        if trigger is not None:
            self._predictions.setdefault(trigger, set()).add(key)
            self._predicted_for[key] = trigger

    def due_at(self, trigger: int) -> Set[str]:
        return set(self._predictions.get(trigger, ()))

    def prediction_index(self) -> Dict[int, Set[str]]:
        return {t: set(keys) for t, keys in sorted(self._predictions.items())}

    # windows and releases

    def start_window(self, window: int) -> None:
        """New privacy unit: clear users, keys and predictions."""
        if self.meta["window"] == window:
            return
        self.user_table.reset()
        self._keys.clear()
        self._predictions.clear()
        self._predicted_for.clear()
        self._dirty_keys.clear()
        self.meta["window"] = window
        self._window_reset = True
        logger.info("started window %d", window)

    def append_releases(self, releases: List[dict]) -> None:
        self._pending_releases.extend(releases)

    # commit protocol

    def begin(self, step: int) -> None:
        if step <= self.last_committed:
            raise SequencingError(f"step {step} is not after last committed step {self.last_committed}")
        if self._open_step is not None:
            raise StateError(f"step {self._open_step} still open")
        self._open_step = step

    def _fire(self, boundary: str, step: int) -> None:
        if self.fault_hook is not None:
            self.fault_hook(boundary, step)

    def commit(self, counters: dict) -> None:
        step = self._open_step
        if step is None:
            raise StateError("commit without begin")

        data = {
            "op": "data",
            "step": step,
            "window": self.meta["window"],
            "reset": self._window_reset,
            "users": self.user_table.dirty_entries(),
            "keys": {k: self._keys[k].to_dict() for k in sorted(self._dirty_keys) if k in self._keys},
            "releases": self._pending_releases,
            "counters": counters,
            "run": self.meta.get("run"),
        }
        if self._wal is not None:
            self._wal.write(_frame({"op": "begin", "step": step}) + _frame(data))
            self._wal.flush()
            self._fire("mid_commit", step)
            self._wal.write(_frame({"op": "commit", "step": step}))
            self._wal.flush()
            os.fsync(self._wal.fileno())

        self.releases.extend(self._pending_releases)
        self.meta["counters"] = dict(counters)
        self.meta["last_committed"] = step
        self._pending_releases = []
        self._dirty_keys.clear()
        self.user_table.mark_clean()
        self._window_reset = False
        self._open_step = None
        self.stats.commits += 1
        self._commits_since_checkpoint += 1

    def maybe_checkpoint(self, every: int) -> None:
        if self._commits_since_checkpoint >= every:
            self.checkpoint()

    def checkpoint(self) -> None:
        if self.path is None:
            return
        if self._open_step is not None:
            raise StateError(f"cannot checkpoint inside step {self._open_step}")

        body = json.dumps(self._snapshot_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        header = _SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, hashlib.sha256(body).digest())
        target = self.path / SNAPSHOT_NAME
        tmp = target.with_suffix(".tmp")
        with open(tmp, "wb") as f:
            f.write(header + body)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, target)

        if self._wal is not None:
            self._wal.truncate(0)
            self._wal.seek(0)
        self._commits_since_checkpoint = 0
        self.stats.checkpoints += 1
        logger.info("checkpointed state at step %d", self.last_committed)

    # snapshot and recovery

    def _snapshot_dict(self) -> dict:
        return {
            "meta": self.meta,
            "users": self.user_table.to_dict(),
            "keys": {k: s.to_dict() for k, s in sorted(self._keys.items())},
            "releases": self.releases,
        }

    def _load_snapshot(self, blob: bytes) -> None:
        if len(blob) < _SNAPSHOT_HEADER.size:
            raise RecoveryError("snapshot shorter than its header")
        magic, version, digest = _SNAPSHOT_HEADER.unpack_from(blob)
        if magic != SNAPSHOT_MAGIC:
            raise RecoveryError("snapshot has a bad magic header")
        if version != SNAPSHOT_VERSION:
            raise RecoveryError(f"unsupported snapshot version {version}")
        body = blob[_SNAPSHOT_HEADER.size:]
        if hashlib.sha256(body).digest() != digest:
            raise RecoveryError("snapshot checksum mismatch")

        data = json.loads(body)
        self.meta = data["meta"]
        self.user_table = UserBudgetTable(data["users"])
        self._keys = {k: KeyState.from_dict(v) for k, v in data["keys"].items()}
        self.releases = data["releases"]

    def _apply(self, data: dict) -> None:
        if data["reset"]:
            self.user_table.reset()
            self._keys.clear()
        self.meta["window"] = data["window"]
        self.user_table.load(data["users"])
        for key, value in data["keys"].items():
            self._keys[key] = KeyState.from_dict(value)
        self.releases.extend(data["releases"])
        self.meta["counters"] = data["counters"]
        if data.get("run"):
            self.meta["run"] = data["run"]
        self.meta["last_committed"] = data["step"]

    def _recover(self) -> None:
        snapshot = self.path / SNAPSHOT_NAME
        if snapshot.exists():
            self._load_snapshot(snapshot.read_bytes())

        wal = self.path / WAL_NAME
        good_end = 0
        if wal.exists():
            blob = wal.read_bytes()
            pending: List[dict] = []
            open_step = None
            for end, entry in _read_frames(blob):
                op = entry.get("op")
                if op == "begin":
                    open_step, pending = entry["step"], []
                elif op == "data" and open_step == entry["step"]:
                    pending.append(entry)
                elif op == "commit" and open_step == entry["step"]:
                    if entry["step"] > self.last_committed:
                        for data in pending:
                            self._apply(data)
                    open_step, pending = None, []
                    good_end = end
                else:
                    raise RecoveryError(f"unexpected write-ahead-log entry {op!r}")
            if open_step is not None:
                logger.warning("discarding uncommitted step %d from the write-ahead log", open_step)
            if good_end < len(blob):
                with open(wal, "r+b") as f:
                    f.truncate(good_end)

        self.user_table.mark_clean()
        self._predictions.clear()
        self._predicted_for.clear()
        for key, state in self._keys.items():
            self._index_prediction(key, state.predicted_release)
