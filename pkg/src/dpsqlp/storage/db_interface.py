#!/usr/bin/env python3
"""
Results store abstraction for run reports, utility reports and sweep rows.
"""

from abc import ABC, abstractmethod
from typing import Dict, List, Optional


class ResultsStore(ABC):
    """Abstract interface for persisted experiment results."""

    @abstractmethod
    def store_record(self, kind: str, data: Dict, run_id: Optional[str] = None, meta: Optional[Dict] = None) -> str:
        """Store a result record and return its id."""
        pass

    @abstractmethod
    def get_run(self, run_id: str) -> List[Dict]:
        """All records of one run, oldest first."""
        pass

    @abstractmethod
    def recent(self, kind: Optional[str] = None, limit: int = 10) -> List[Dict]:
        """Most recent records, optionally of one kind."""
        pass

    @abstractmethod
    def stats(self) -> Dict[str, int]:
        """Record counts by kind."""
        pass

    @abstractmethod
    def health_check(self) -> bool:
        """Check database connectivity."""
        pass

    @abstractmethod
    def close(self) -> None:
        """Close database connection."""
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
