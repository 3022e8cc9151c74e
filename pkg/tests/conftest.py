import pytest

CRITERIA = {}
OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, label = mark.args
            CRITERIA[number] = label


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number = mark.args[0]
    if rep.when == "call" or rep.failed:
        ok = rep.passed and not hasattr(rep, "wasxfail")
        prev = OUTCOMES.get(number, True)
        OUTCOMES[number] = prev and ok


def pytest_terminal_summary(terminalreporter):
    if not OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(OUTCOMES):
        status = "PASS" if OUTCOMES[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {CRITERIA[number]}")
