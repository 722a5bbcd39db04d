import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

HELPERS = Path(__file__).parent / "helpers"

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def predictor_cmd(mode: str = "ok") -> str:
    """Command line for the fake external predictor test double."""
    return f"{sys.executable} {HELPERS / 'fake_predictor.py'} {mode}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
