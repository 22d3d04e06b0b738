import sys
from pathlib import Path

# make the shared oracle helpers importable from every test module
sys.path.insert(0, str(Path(__file__).parent))

CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERIA, key=lambda l: int(l.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
