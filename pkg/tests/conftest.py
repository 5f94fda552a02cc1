"""Shared fixtures: frozen records, the toy model, and golden checksums.

Everything under tests/fixtures/ was produced by gen_fixtures.py (the toy
model, the fixture image, the recorded runs) and oracle_golden.py (the
golden saliency tensors and checksums, computed by a straight-line script
that does not import this package). Tests load them read-only.
"""

import json
from pathlib import Path

import pytest

from conceptorcam.records import load_record, load_toy_spec
from conceptorcam.tensorfile import load_tensor

FIXTURES = Path(__file__).parent / "fixtures"

# One line per acceptance criterion, filled in by test_acceptance.py and
# echoed after the run so the verdicts survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def golden_record():
    """The frozen replay record (no model link)."""
    return load_record(FIXTURES / "golden_record")


@pytest.fixture(scope="session")
def live_record():
    """Same tensors as golden_record but holding a toy model reference."""
    return load_record(FIXTURES / "golden_record" / "record_live.json")


@pytest.fixture(scope="session")
def toy_spec():
    return load_toy_spec(FIXTURES / "toy_model" / "model.json")


@pytest.fixture(scope="session")
def fixture_image():
    return load_tensor(FIXTURES / "fixture_image.cct")


@pytest.fixture(scope="session")
def golden_checksums():
    return json.loads((FIXTURES / "golden" / "golden_checksums.json").read_text())
