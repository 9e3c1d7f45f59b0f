from pathlib import Path

import pytest

from threatchain import catalog

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def iomt():
    return catalog.builtin_iomt_model()


@pytest.fixture
def iomt_doc():
    return catalog.model_to_dict(catalog.builtin_iomt_model())


@pytest.fixture
def nvd_fixtures():
    return FIXTURES / "nvd"


_acceptance: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__ != "test_acceptance" or item.function.__doc__ is None:
        return
    label = item.function.__doc__.strip().splitlines()[0]
    key = item.nodeid
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _acceptance[key] = (label, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    # collapse parametrized cases into one line per criterion
    merged: dict[str, str] = {}
    for label, status in _acceptance.values():
        if merged.get(label) != "FAIL":
            merged[label] = status
    for label, status in sorted(merged.items(), key=lambda kv: int(kv[0].split()[0][2:])):
        terminalreporter.write_line(f"{status}  {label}")
