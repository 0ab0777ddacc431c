import pytest

#: "PASS/FAIL criterion N: ..." lines appended by the acceptance module.
VERDICTS: list[str] = []


@pytest.fixture()
def verdict(request):
    """Call ``verdict(n, text)`` at the start of a criterion test.

    The line is recorded as PASS if the test body finishes, FAIL otherwise.
    """
    entry = {}

    def record(n, text):
        entry.update(n=n, text=text)

    yield record
    if entry:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        line = f"{'PASS' if ok else 'FAIL'} criterion {entry['n']}: {entry['text']}"
        VERDICTS.append(line)
        print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
