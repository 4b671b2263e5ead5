import json
import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name):
    with open(FIXTURES / name) as fh:
        return json.load(fh)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    """record(num, checks) stores the line and returns whether every check passed."""
    def rec(num, checks, detail=""):
        ok = all(bool(v) for v in checks.values())
        bad = [k for k, v in checks.items() if not v]
        line = detail + (f"  failed: {', '.join(bad)}" if bad else "")
        ACCEPTANCE[num] = (ok, line.strip())
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {line.strip()}")
        return ok
    return rec
