import json
from pathlib import Path

import pytest

from isorobust.dsl import smallbank as _smallbank
from isorobust.oracle import from_json

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and (rep.when == "call" or rep.outcome != "passed"):
        rep.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    results: dict[str, bool] = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            for name, label in getattr(rep, "user_properties", []):
                if name == "criterion":
                    results[label] = results.get(label, True) and key == "passed"
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in results.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")


@pytest.fixture(scope="session")
def smallbank():
    return _smallbank()


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURES / f"{name}.json").read_text())


def fixture_schedule(name: str):
    return from_json(load_fixture(name)["schedule"])
