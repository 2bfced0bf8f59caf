import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA = []


def report_criterion(number, ok, detail):
    line = f'criterion {number}: {"PASS" if ok else "FAIL"} {detail}'
    CRITERIA.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section('acceptance criteria')
        for line in CRITERIA:
            terminalreporter.write_line(line)
