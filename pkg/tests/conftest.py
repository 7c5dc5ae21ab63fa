"""
Shared fixtures: seeded record streams and small engine configurations.
"""

import pytest

from dpsqlp.engine import PipelineConfig, WindowSpec
from tests.streams import WINDOW_LENGTH, random_stream


@pytest.fixture(autouse=True)
def no_path_env(monkeypatch):
    monkeypatch.delenv("DPSQLP_STATE_DIR", raising=False)
    monkeypatch.delenv("DPSQLP_RESULTS_DB", raising=False)


@pytest.fixture
def window() -> WindowSpec:
    return WindowSpec(start=0.0, length=WINDOW_LENGTH)


@pytest.fixture
def make_stream():
    return random_stream


@pytest.fixture
def make_config(window):
    """PipelineConfig factory with small, fast defaults; keywords override."""

    def build(**overrides) -> PipelineConfig:
        params = dict(epsilon=6.0, delta=1e-9, C=3, mu=0.0, L_m=1.0, T=10, window=window, seed=7)
        params.update(overrides)
        return PipelineConfig(**params)

    return build
