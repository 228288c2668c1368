import numpy as np
import pytest

from doublestate.linalg import random_state
from doublestate.measure import DoubleState

# Lines recorded by test_acceptance.py, one per criterion.
ACCEPTANCE_LINES: list[str] = []


def random_trace_one(d, rng, scale=1.0):
    m = scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    return DoubleState(m + (1 - np.trace(m)) / d * np.eye(d))


def random_complex(rng, scale=1.0):
    return complex(scale * rng.standard_normal(), scale * rng.standard_normal())


def random_pair(d, rng, min_overlap=1e-3):
    while True:
        psi, phi = random_state(d, rng), random_state(d, rng)
        if abs(np.vdot(phi.amplitudes, psi.amplitudes)) > min_overlap:
            return psi, phi


def random_plan(W, rng):
    """Random basis and probabilities, each p_i at least 0.2 / (d + 1).

    Reconstruction error grows like eps / p_i (eps / p_{d+1}^2 for the extra
    process) once states are normalized, so vanishing probabilities are kept
    out of the random plans.
    """
    from doublestate.decompose import DecompositionPlan
    from doublestate.linalg import random_unitary

    d = W.dim
    p = 0.8 * rng.dirichlet(np.ones(d + 1)) + 0.2 / (d + 1)
    return DecompositionPlan(random_unitary(d, rng), p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
