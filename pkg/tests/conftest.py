import math

import numpy as np
import pytest

from dpl.core_model import SLParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_params(rng, eps=None, tau_max=2 * math.pi):
    b = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
    return SLParams(a=rng.uniform(0.5, 2.0), b=b, rho=rng.uniform(-math.pi, math.pi),
                    eps=rng.uniform(0.0, 0.3) if eps is None else eps,
                    tau=rng.uniform(0.0, tau_max))


# Acceptance verdicts, printed after the run so they survive output capture.
ACCEPTANCE_LINES = []


def record_verdict(criterion: str, passed: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
