import sys
from pathlib import Path

# lets tests import the shared oracles module
sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES, key=acceptance_log.order):
            terminalreporter.write_line(line)
