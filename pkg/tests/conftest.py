import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, settings

# single-thread keeps torch reductions bitwise reproducible across runs
torch.set_num_threads(1)

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    # keep loss-network cache lookups away from the user's real cache dir
    monkeypatch.setenv("THERMOSCOPE_CACHE", str(tmp_path / "cache"))


@pytest.fixture(scope="session")
def loss_network():
    from thermoscope.style.features import LossNetwork

    return LossNetwork(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
