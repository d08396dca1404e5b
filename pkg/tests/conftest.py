from __future__ import annotations

import math
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"


def _same(a, b, rel: float) -> bool:
    if isinstance(a, float) and isinstance(b, float):
        if math.isnan(a) or math.isnan(b):
            return math.isnan(a) and math.isnan(b)
        return a == b or math.isclose(a, b, rel_tol=rel, abs_tol=0.0)
    return a == b


@pytest.fixture
def golden():
    """Compare CSV rows with a frozen pilot run; floats to ``rel``, everything else exactly."""
    from modemlab.experiments.tables import read_csv

    def check(rows, name: str, rel: float = 1e-9):
        schema, expected = read_csv(GOLDEN / name)
        assert len(rows) == len(expected)
        for got, want in zip(rows, expected):
            for column, _ in schema.columns:
                assert _same(got[column], want[column], rel), (name, column, got[column], want[column])

    return check


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
