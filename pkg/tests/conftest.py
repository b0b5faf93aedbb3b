import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    label = item.get_closest_marker("criterion")
    if label is None:
        return
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {status}: {label.args[0]}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")
