"""Suite-wide pytest glue.

test_acceptance.py records one line per release check through
``record_acceptance``; after the run those lines are printed as a scoreboard
so a full ``pytest`` ends with an at-a-glance verdict. Runs that never touch
the acceptance module print nothing extra.
"""

from __future__ import annotations

from typing import Dict, Tuple

_SCOREBOARD: Dict[int, Tuple[str, bool, str]] = {}


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> None:
    _SCOREBOARD[number] = (name, passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _SCOREBOARD:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_SCOREBOARD):
        name, passed, detail = _SCOREBOARD[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"ACCEPTANCE {number:02d} {name:<24s} {verdict}  {detail}"
        )
