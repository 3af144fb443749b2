import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))  # makes _oracles importable

_ACCEPT = re.compile(r"test_acceptance\.py::test_c(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            match = _ACCEPT.search(getattr(rep, "nodeid", ""))
            if match is None:
                continue
            if getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            num = int(match.group(1))
            label = {"passed": "PASS", "failed": "FAIL",
                     "error": "FAIL", "skipped": "SKIP"}[outcome]
            # a failed call beats a passed setup record
            if results.get(num) != "FAIL":
                results[num] = label
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(f"criterion {num:2d}: {results[num]}")
