import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def default_converge(tmp_path_factory):
    """One single-threaded run of the shipped circle converge config: (exit code, out dir, seconds)."""
    from deltashell.cli import main

    out = str(tmp_path_factory.mktemp("default_converge"))
    start = time.perf_counter()
    code = main(["converge", "--config", os.path.join(CONFIG_DIR, "circle_converge.json"),
                 "--out", out, "--plot", "--threads", "1"])
    return code, out, time.perf_counter() - start


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
