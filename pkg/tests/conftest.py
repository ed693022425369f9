import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m or report.when != "call" and not report.failed:
        return
    n = int(m.group(1))
    detail = "; ".join(v for k, v in report.user_properties if k == "detail")
    prev = _ACCEPTANCE.get(n)
    ok = report.passed and (prev is None or prev[0])
    _ACCEPTANCE[n] = (ok, detail or (prev[1] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
