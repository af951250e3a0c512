import numpy as np
import pytest
from hypothesis import strategies as st

from delaybvp.greens import BvpParams


@st.composite
def valid_params(draw, lam=1.0):
    eta = draw(st.floats(0.02, 0.98))
    alpha = draw(st.floats(0.0, 0.98)) / eta
    beta = draw(st.floats(0.0, 0.98)) * (1.0 - alpha * eta) / (1.0 - eta)
    tau = draw(st.floats(0.02, 0.98))
    return BvpParams(alpha=alpha, beta=beta, eta=eta, tau=tau, lam=lam)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ones(t):
    return np.ones_like(np.asarray(t, dtype=float))


_ACCEPTANCE = pytest.StashKey[list]()


class AcceptanceLog:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __init__(self, lines):
        self.lines = lines

    def record(self, number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        self.lines.append((number, line))
        print(line)
        return ok


@pytest.fixture(scope="session")
def acceptance(request):
    return AcceptanceLog(request.config.stash.setdefault(_ACCEPTANCE, []))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
