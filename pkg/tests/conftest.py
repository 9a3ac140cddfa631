import re

CRITERIA = {
    1: "two-item market revenues 5 and 8",
    2: "training rows from the two-auction history",
    3: "learned stumps and ordering values 16/13/14/15",
    4: "small MIP optimum 12 and loose 99.5 coefficient",
    5: "encoding faithfulness on 50 fixtures",
    6: "white-box solver equals brute force on 30 fixtures",
    7: "black-box search bounded by brute force",
    8: "partition gadgets agree with subset-sum decider",
    9: "desk-scale trend reproduction",
    10: "bench determinism",
}

_outcomes = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_ac(\d+)_", report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        _outcomes[k] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, label in CRITERIA.items():
        if k in _outcomes:
            terminalreporter.write_line(f"criterion {k:2d} {_outcomes[k]}: {label}")
