"""
Run configuration for the streaming engine.
"""

import hashlib
import json
import math
import os
from argparse import Namespace
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from dateutil import parser as date_parser

from dpsqlp.accountant import DpBudget
from dpsqlp.accountant.composition import Composition
from dpsqlp.bounding import SensitivityConfig
from dpsqlp.errors import InvalidParameterError
from dpsqlp.perturb import ColumnSpec

DAY_SECONDS = 86_400.0
DEFAULT_BETA = 1e-10


def default_state_dir() -> Optional[Path]:
    value = os.getenv("DPSQLP_STATE_DIR")
    return Path(value) if value else None


def _finite_instant(value, seconds: float) -> float:
    if not math.isfinite(seconds):
        raise InvalidParameterError(f"instant {value!r} is not finite")
    return seconds


def parse_instant(value) -> float:
    """Epoch seconds from a number or an ISO-8601 string."""
    if isinstance(value, (int, float)):
        return _finite_instant(value, float(value))
    text = str(value).strip()
    try:
        seconds = float(text)
    except ValueError:
        seconds = None
    if seconds is not None:
        return _finite_instant(value, seconds)
    try:
        instant = date_parser.isoparse(text)
    except ValueError as e:
        raise InvalidParameterError(f"cannot parse instant {value!r}: {e}") from e
    if instant.tzinfo is None:
        raise InvalidParameterError(f"instant {value!r} has no timezone")
    return instant.timestamp()


@dataclass(frozen=True)
class WindowSpec:
    """Fixed event-time windows [start + w·length, start + (w+1)·length)."""
    start: float = 0.0
    length: float = DAY_SECONDS
    allowed_lateness: Optional[float] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.length) and self.length > 0):
            raise InvalidParameterError(f"window length must be > 0, got {self.length}")
        if self.allowed_lateness is not None and self.allowed_lateness < 0:
            raise InvalidParameterError("allowed lateness must be >= 0")

    def window_of(self, timestamp: float) -> int:
        if not math.isfinite(timestamp):
            raise InvalidParameterError(f"timestamp {timestamp!r} is not finite")
        return math.floor((timestamp - self.start) / self.length)

    def bounds(self, window: int) -> Tuple[float, float]:
        lo = self.start + window * self.length
        return lo, lo + self.length


@dataclass
class PipelineConfig:
    epsilon: float
    delta: float
    beta: float = DEFAULT_BETA
    C: int = 1
    mu: float = 0.0
    L_m: float = 1.0
    T: int = 10
    window: WindowSpec = field(default_factory=WindowSpec)
    seed: int = 0
    key_selection_fraction: float = 0.5
    key_selection_delta_fraction: float = 2.0 / 3.0
    key_selection_composition: Composition = "advanced"
    columns: Tuple[ColumnSpec, ...] = ()
    max_releases: Optional[int] = None
    state_dir: Optional[Path] = field(default_factory=default_state_dir)
    checkpoint_every: int = 10
    prediction: bool = True
    noiseless: bool = False

    def __post_init__(self) -> None:
        if not self.columns:
            self.columns = (ColumnSpec("value", "sum", self.L_m),)
        if self.state_dir is not None:
            self.state_dir = Path(self.state_dir)

    @property
    def total_budget(self) -> DpBudget:
        return DpBudget(self.epsilon, self.delta)

    @property
    def sensitivity(self) -> SensitivityConfig:
        return SensitivityConfig(C=self.C, L_m=self.L_m)

    @property
    def release_capacity(self) -> int:
        return self.max_releases or self.T

    def validate(self) -> "PipelineConfig":
        """Raise InvalidParameterError naming the first bad field."""
        checks = [
            ("epsilon", math.isfinite(self.epsilon) and self.epsilon > 0),
            ("delta", 0 < self.delta < 1),
            ("beta", 0 < self.beta < 1),
            ("C", int(self.C) == self.C and self.C >= 1),
            ("mu", math.isfinite(self.mu) and self.mu >= 0),
            ("L_m", math.isfinite(self.L_m) and self.L_m > 0),
            ("T", int(self.T) == self.T and self.T >= 1),
            ("key_selection_fraction", 0 < self.key_selection_fraction < 1),
            ("key_selection_delta_fraction", 0 < self.key_selection_delta_fraction < 1),
            ("key_selection_composition", self.key_selection_composition in ("naive", "advanced", "optimal")),
            ("max_releases", self.max_releases is None or self.max_releases >= 1),
            ("checkpoint_every", self.checkpoint_every >= 1),
        ]
        for name, ok in checks:
            if not ok:
                raise InvalidParameterError(f"invalid {name}: {getattr(self, name)!r}")

        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"duplicate aggregation columns: {names}")
        for column in self.columns:
            if column.kind == "sum" and column.clamp > self.L_m:
                raise InvalidParameterError(f"column {column.name!r} clamp exceeds L_m={self.L_m}")
        return self

    def to_dict(self) -> dict:
        data = asdict(self)
        data["state_dir"] = str(self.state_dir) if self.state_dir else None
        return data

    def digest(self) -> str:
        """Fingerprint of every setting that changes releases."""
        data = self.to_dict()
        for local_only in ("state_dir", "checkpoint_every", "prediction"):
            data.pop(local_only)
        payload = json.dumps(data, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    @classmethod
    def from_args(cls, args: Namespace) -> "PipelineConfig":
        window = WindowSpec(
            start=parse_instant(args.window_start),
            length=args.window_days * DAY_SECONDS,
            allowed_lateness=args.lateness,
        )
        columns = tuple(ColumnSpec.parse(c, args.clamp) for c in (args.columns or []))
        return cls(
            epsilon=args.epsilon,
            delta=args.delta,
            beta=args.beta,
            C=args.c,
            mu=args.mu,
            L_m=args.clamp,
            T=args.triggers,
            window=window,
            seed=args.seed,
            key_selection_fraction=args.key_fraction,
            key_selection_delta_fraction=args.key_delta_fraction,
            key_selection_composition=args.composition,
            columns=columns,
            max_releases=args.max_releases,
            state_dir=Path(args.state) if args.state else default_state_dir(),
            checkpoint_every=args.checkpoint_every,
            prediction=not args.no_prediction,
        ).validate()
