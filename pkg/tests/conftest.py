"""Collects one verdict line per acceptance criterion and prints them at the end of the run."""

_VERDICTS = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        label = props.get("criterion", report.nodeid.split("::")[-1])
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, report.outcome.upper())
        _VERDICTS.append(f"{verdict}  {label}: {props.get('detail', '')}".rstrip(": "))


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
