import math

import numpy as np
import pytest
from hypothesis import strategies as st

from lindblad_gauss import GaussianMoments, InitialConditions, LindbladParams

# tag -> (description, [outcome per parametrized case])
ACCEPTANCE: dict[str, tuple[str, list[bool]]] = {}


def record_acceptance(tag: str, text: str, passed: bool) -> None:
    ACCEPTANCE.setdefault(tag, (text, []))[1].append(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag, (text, outcomes) in ACCEPTANCE.items():
        status = "PASS" if all(outcomes) else "FAIL"
        cases = f" ({sum(outcomes)}/{len(outcomes)} cases)" if len(outcomes) > 1 else ""
        terminalreporter.write_line(f"[{status}] {tag} {text}{cases}")


@pytest.fixture
def baseline():
    return LindbladParams(gamma=0.5, h11=4.0, h33=8.0, h13r=4.0)


@pytest.fixture
def ground_ic():
    return InitialConditions(0.5, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def valid_states(draw, max_omega_sq=1e3):
    """Valid Gaussian states with Omega^2 in [1/4, max_omega_sq]."""
    log_w2 = draw(st.floats(math.log(0.25), math.log(max_omega_sq)))
    w2 = max(0.25, math.exp(log_w2))
    C = math.exp(draw(st.floats(-3.0, 3.0)))
    B = draw(st.floats(-5.0, 5.0))
    mR = draw(st.floats(-3.0, 3.0))
    mP = draw(st.floats(-3.0, 3.0))
    return GaussianMoments((w2 + B * B) / C, B, C, mR, mP)
