import numpy as np
import pytest

from followerscope.ingest import DAY, FollowerMap
from followerscope.synth import GrowthModel, simulate_base_map

T0 = 1_500_000_000
YEAR = 365 * DAY


def make_map(created, account_id="acc", collected_at=None, ids=None):
    created = np.asarray(created, dtype=np.int64)
    if ids is None:
        ids = [f"{account_id}-{i}" for i in range(created.size)]
    if collected_at is None:
        collected_at = int(created.max()) + DAY
    return FollowerMap(account_id, ids, created, collected_at)


@pytest.fixture
def growth():
    return GrowthModel(T0, T0 + 3 * YEAR)


@pytest.fixture
def sim_map(growth):
    return simulate_base_map(5_000, growth, seed=11, account_id="base")


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
