import numpy as np
import pytest

from wgheat.generator import ReducedState
from wgheat.model import SystemConfig, fig2_config, fig3_config, fig4_config, fig5_config


def random_config(rng: np.random.Generator) -> SystemConfig:
    """Valid config with every decay channel open, so the steady state is unique."""
    w2, w3 = rng.uniform(20.0, 60.0, size=2)
    w4 = max(w2, w3) + rng.uniform(3.0, 30.0)
    gamma = rng.uniform(0.05, 1.0, size=4)
    rabi = rng.uniform(0.0, 2.0, size=2)
    temps = rng.uniform(0.5, 20.0, size=2)
    laser = np.array([w4 - w2, w4 - w3]) + rng.uniform(-0.5, 0.5, size=2)
    return SystemConfig((0.0, w2, w3, w4), tuple(gamma), tuple(rabi), tuple(laser), tuple(temps))


def random_configs(n: int, seed: int = 2024) -> list[SystemConfig]:
    rng = np.random.default_rng(seed)
    return [random_config(rng) for _ in range(n)]


FIGURE_CONFIGS = {
    "fig2": fig2_config(temp1=10.0, temp2=0.0),
    "fig3a": fig3_config(1.0, 1.0, 1.0, 10.0),
    "fig3c": fig3_config(1.0, 1.0, 10.0, 1.0),
    "fig4": fig4_config(0.1),
    "fig5": fig5_config(10.0),
}


@pytest.fixture(params=sorted(FIGURE_CONFIGS))
def figure_config(request) -> SystemConfig:
    return FIGURE_CONFIGS[request.param]


def random_hermitian(rng, dim=4) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


def random_density(rng, dim=4) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def reduced_random(rng, normalized=True) -> ReducedState:
    """Random tracked elements of a valid state (a random full state with the
    untracked coherences dropped is not always PSD, so build the 3x3 block on
    levels 2, 3, 4 as a Gram matrix and put level 1 on the side)."""
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    block = a @ a.conj().T
    p1 = rng.uniform()
    block = block / np.trace(block).real * (1 - p1)
    return ReducedState(p1, block[0, 0].real, block[1, 1].real, block[2, 2].real,
                        complex(block[2, 0]), complex(block[2, 1]), complex(block[1, 0]))


# one line per acceptance criterion, collected by test_acceptance and echoed
# in the terminal summary so the verdicts are visible without -s
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
