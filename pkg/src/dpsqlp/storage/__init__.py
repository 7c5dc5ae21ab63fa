"""
Storage module for experiment results.
"""

from dpsqlp.storage.db_interface import ResultsStore
from dpsqlp.storage.duck_store import DuckDBResultsStore, get_results_store

__all__ = ["DuckDBResultsStore", "ResultsStore", "get_results_store"]
