"""
Zipf-Mandelbrot distribution on {1..N}: p(x) ∝ (x+q)^-s.

Sampling is exact inverse-CDF. Supports up to EXACT_LIMIT use a cumulative
table and binary search; beyond that the head keeps the table and the tail
CDF is evaluated through Hurwitz zeta differences (s > 1 only).
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import zeta

from dpsqlp.errors import InvalidParameterError

EXACT_LIMIT = 10_000_000


@dataclass(frozen=True)
class ZipfMandelbrotDist:
    q: float
    s: float
    support: int
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not self.q >= 0:
            raise InvalidParameterError(f"q must be >= 0, got {self.q}")
        if not self.s > 0:
            raise InvalidParameterError(f"s must be > 0, got {self.s}")
        if int(self.support) != self.support or self.support < 1:
            raise InvalidParameterError(f"support must be a positive integer, got {self.support}")
        if self.support > EXACT_LIMIT and self.s <= 1:
            raise InvalidParameterError("supports beyond the exact table need s > 1")

    @property
    def head(self) -> int:
        return min(int(self.support), EXACT_LIMIT)

    def _head_cumulative(self) -> np.ndarray:
        if "cum" not in self._cache:
            x = np.arange(1, self.head + 1, dtype=np.float64)
            # factor out (1+q)^-s so large s does not underflow
            weights = np.exp(-self.s * (np.log(x + self.q) - np.log1p(self.q)))
            self._cache["cum"] = np.cumsum(weights)
        return self._cache["cum"]

    def _scaled_zeta(self, a) -> np.ndarray:
        return zeta(self.s, np.asarray(a, dtype=np.float64)) * (1.0 + self.q) ** self.s

    @cached_property
    def tail_mass(self) -> float:
        if self.support <= self.head:
            return 0.0
        return float(self._scaled_zeta(self.head + 1 + self.q) - self._scaled_zeta(self.support + 1 + self.q))

    @cached_property
    def total_mass(self) -> float:
        return float(self._head_cumulative()[-1]) + self.tail_mass

    def pmf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        p = np.exp(-self.s * (np.log(x + self.q) - np.log1p(self.q))) / self.total_mass
        return np.where((x >= 1) & (x <= self.support), p, 0.0)

    def mean(self) -> float:
        if self.support > self.head:
            raise InvalidParameterError("mean is only computed for supports within the exact table")
        x = np.arange(1, self.head + 1, dtype=np.float64)
        return float(np.sum(x * self.pmf(x)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """size independent draws as int64."""
        u = rng.random(size) * self.total_mass
        cum = self._head_cumulative()
        out = np.searchsorted(cum, u, side="right").astype(np.int64) + 1
        in_tail = out > self.head
        if in_tail.any():
            out[in_tail] = self._sample_tail(u[in_tail] - cum[-1])
        return np.minimum(out, self.support)

    def _sample_tail(self, residual: np.ndarray) -> np.ndarray:
        """Smallest x in (head, N] with tail mass of (head, x] >= residual."""
        start = self._scaled_zeta(self.head + 1 + self.q)
        lo = np.full(residual.shape, self.head + 1, dtype=np.int64)
        hi = np.full(residual.shape, int(self.support), dtype=np.int64)
        while np.any(lo < hi):
            mid = (lo + hi) // 2
            covered = start - self._scaled_zeta(mid + 1 + self.q) >= residual
            hi = np.where(covered, mid, hi)
            lo = np.where(covered, lo, mid + 1)
        return lo


def sample_zipf_mandelbrot(dist: ZipfMandelbrotDist, rng: np.random.Generator) -> int:
    return int(dist.sample(rng, 1)[0])


RECORD_COUNT_DIST = ZipfMandelbrotDist(q=26.0, s=6.738, support=100_000)
KEY_DIST_PARAMS = {"q": 1000.0, "s": 1.4}
