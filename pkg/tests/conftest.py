import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import acceptance_log  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in acceptance_log.RESULTS:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
    n_fail = sum(not ok for _, ok, _ in acceptance_log.RESULTS)
    terminalreporter.write_line(f"{len(acceptance_log.RESULTS) - n_fail} passed, {n_fail} failed")
