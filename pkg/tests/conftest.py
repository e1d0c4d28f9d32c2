"""Shared fixtures for mtpopart tests."""

import numpy as np
import pytest

from mtpopart.returns import reset_ratio_overflow_count
from mtpopart.run_config import RunConfig


@pytest.fixture(autouse=True)
def _reset_ratio_counter():
    """The saturation counter is process-global; give every test a clean slate."""
    reset_ratio_overflow_count()


@pytest.fixture()
def out_dir(tmp_path, monkeypatch):
    """Redirect relative output directories to a temp root."""
    monkeypatch.setenv("MTPOPART_OUT_ROOT", str(tmp_path))
    return tmp_path


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def small_config():
    """A run small enough to finish in well under a second."""
    return RunConfig(
        suite="pair2",
        frames=400,
        actors=2,
        unroll_length=10,
        batch_size=2,
        hidden=8,
        synchronous=True,
        eval_episodes=0,
        oracle_episodes=20,
    )
