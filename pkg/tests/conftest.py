import math

import pytest

from fastgates import gpg, trap
from fastgates.gatekernel import ThermalState

PERIOD = 2.0 * math.pi


@pytest.fixture(scope="session")
def trap_q01():
    return trap.calibrate(0.01)


@pytest.fixture(scope="session")
def trap_q05():
    return trap.calibrate(0.5)


@pytest.fixture(scope="session")
def trap_q0():
    # exactly harmonic; calibration degenerates to a = beta^2 scaled
    return trap.calibrate(0.0)


@pytest.fixture(scope="session")
def vacuum():
    return ThermalState(0.0, 0.0)


@pytest.fixture(scope="session")
def small_solution(trap_q01):
    """A quick low-budget solve shared by the noise/persist/cli tests."""
    cfg = gpg.SearchConfig(
        gate_time_target=1.0 * PERIOD,
        n_groups=40,
        multistarts=2,
        stage1_inits=4,
        top_k=4,
        stage2_iters=150,
        rng_seed=3,
    )
    return gpg.solve_gate(trap_q01, cfg).best


@pytest.fixture(scope="session")
def q05_solution(trap_q05):
    """Deep-modulation solve used by the noise-sensitivity orderings."""
    cfg = gpg.SearchConfig(
        gate_time_target=2.0 * PERIOD,
        n_groups=40,
        multistarts=2,
        stage1_inits=4,
        top_k=4,
        stage2_iters=150,
        rng_seed=3,
        stage1_method="lbfgs",
    )
    return gpg.solve_gate(trap_q05, cfg).best


@pytest.fixture(scope="session")
def rep_solution(trap_q01):
    """Finite-repetition-rate counterpart of small_solution."""
    cfg = gpg.SearchConfig(
        gate_time_target=2.0 * PERIOD,
        rep_rate=800.0,
        n_groups=40,
        multistarts=2,
        stage1_inits=4,
        top_k=4,
        stage2_iters=150,
        rng_seed=3,
    )
    return gpg.solve_gate(trap_q01, cfg).best
