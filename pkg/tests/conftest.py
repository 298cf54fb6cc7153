import json
from pathlib import Path

import numpy as np
import pytest

FROZEN = json.loads(Path(__file__).with_name("frozen.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def frozen():
    return FROZEN


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str, elapsed: float | None = None):
        took = f" [{elapsed:.2f} s]" if elapsed is not None else ""
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title}: {detail}{took}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
