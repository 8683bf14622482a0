import os
import time

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance criteria register one line each here; printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


# epsilons needed by the synthetic trend criterion: 1..6 and 10
FIG1_EPS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0)


@pytest.fixture(scope="session")
def fig1_sweep():
    """Synthetic d=100, r=1, alpha=1, ratio 0.15, logistic; all mechanisms, 20 seeds.

    Returns ``(rows, seconds)``. Shared by the acceptance suite and the
    mechanism trend checks so the sweep runs once per session.
    """
    from onebit_dp import experiments as ex

    cfg = ex.ExperimentConfig(epsilons=FIG1_EPS, seeds=tuple(range(20)))
    t0 = time.perf_counter()
    rows = ex.run_synthetic(cfg)
    return rows, time.perf_counter() - t0
