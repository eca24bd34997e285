"""Shared pytest plumbing: the acceptance-criterion verdict report.

Acceptance tests record one line per criterion through ``record_verdict``;
the collected lines are echoed in the terminal summary and written to
``acceptance_report.txt`` next to this file so the verdicts survive
output capturing.
"""

import os

_VERDICTS = {}
_REPORT_PATH = os.path.join(os.path.dirname(__file__), "..", "acceptance_report.txt")


def record_verdict(number: int, passed: bool, detail: str) -> str:
    line = f"AC{number} {'PASS' if passed else 'FAIL'}: {detail}"
    _VERDICTS[number] = line
    with open(_REPORT_PATH, "w", encoding="utf-8") as fh:
        for _, text in sorted(_VERDICTS.items()):
            fh.write(text + "\n")
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS.items()):
        terminalreporter.write_line(line)