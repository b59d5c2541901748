from pathlib import Path

import pytest

from twr_tdoa.geometry import GroundTruth
from twr_tdoa.protocol import ProtocolTiming
from twr_tdoa.timebase import MS, NS, ClockModel

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def worked_truth():
    # T_ab = 100 ns, T_at = 50 ns, T_bt = 80 ns
    return GroundTruth(100 * NS, 50 * NS, 80 * NS)


@pytest.fixture
def worked_clocks():
    return (
        ClockModel.from_ppm(10, node_id="A"),
        ClockModel.from_ppm(-5, node_id="B"),
        ClockModel.from_ppm(20, node_id="T"),
    )


@pytest.fixture
def ideal_clocks():
    return (ClockModel(), ClockModel(), ClockModel())


@pytest.fixture
def ss_timing():
    return ProtocolTiming(delay_b=1 * MS)


@pytest.fixture
def ds_timing():
    return ProtocolTiming(delay_b=1 * MS, delay_a=750_000 * NS)


@pytest.fixture
def scenarios_dir():
    return ROOT / "scenarios"


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one verdict line for the end-of-run acceptance summary."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
