import hypothesis
import numpy as np
import pytest

from jbps import ChannelConfig, LinkParams, SystemInstance, Targets, generate_instance

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; echoed in the terminal summary."""

    def record(number, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def random_instance(rng: np.random.Generator, num_antennas: int, num_users: int, sigma2=1.0, delta2=1.0, zeta=0.5):
    """Unit-scale complex Gaussian channels; noise in the same units."""
    H = (rng.standard_normal((num_antennas, num_users)) + 1j * rng.standard_normal((num_antennas, num_users))) / np.sqrt(2)
    return SystemInstance(channels=H, antenna_noise=np.full(num_users, sigma2), id_noise=np.full(num_users, delta2),
                          eh_efficiency=np.full(num_users, zeta))


def model_instance(num_antennas=4, num_users=4, draw=0, seed=0):
    directions = ChannelConfig().user_directions[:num_users]
    return generate_instance(ChannelConfig(num_antennas=num_antennas, user_directions=directions, seed=seed),
                             LinkParams(), draw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def default_instance():
    return model_instance()


@pytest.fixture
def default_targets():
    return Targets.uniform(4, 10.0, -10.0)
