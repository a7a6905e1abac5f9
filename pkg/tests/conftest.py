import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ladder_reduction import CouplingSet, ReductionConfig, run_reduction  # noqa: E402

LADDER_COUPLINGS = {"J_l": 5.0, "J_c": 3.0}


@pytest.fixture(scope="session")
def l6_traces():
    """Full L=6 reductions shared by the slow tests, keyed by (scheme, J_t)."""
    cache = {}

    def get(scheme: str, J_t: float):
        key = (scheme, J_t)
        if key not in cache:
            cfg = ReductionConfig(scheme, 6, CouplingSet(J_t, **LADDER_COUPLINGS))
            cache[key] = run_reduction(cfg)
        return cache[key]

    return get


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
