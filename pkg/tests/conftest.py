import re

_RESULTS: dict[int, tuple[str, str, float]] = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    num, slug = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "call" or report.outcome != "passed":
        # parametrized criteria fail if any case fails; durations add up
        status, _, total = _RESULTS.get(num, ("PASS", slug, 0.0))
        if report.outcome != "passed":
            status = "FAIL"
        _RESULTS[num] = (status, slug, total + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        status, slug, dur = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {slug}  ({dur:.1f} s)")
