import hypothesis
import numpy as np
import pytest

# Deterministic hypothesis runs so numeric tolerances are stable in CI.
hypothesis.settings.register_profile(
    "deterministic", derandomize=True, deadline=None, max_examples=40
)
hypothesis.settings.load_profile("deterministic")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
