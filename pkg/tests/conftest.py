from __future__ import annotations

from collections import OrderedDict
from pathlib import Path

import pytest

import patchlum

DATA = Path(patchlum.__file__).resolve().parent / "data"

_criteria: "OrderedDict[str, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            entry = _criteria.setdefault(number, {"title": title, "tests": OrderedDict()})
            entry["tests"][item.nodeid] = None


def pytest_runtest_logreport(report):
    for entry in _criteria.values():
        if report.nodeid in entry["tests"]:
            if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
                entry["tests"][report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, entry in sorted(_criteria.items(), key=lambda kv: int(kv[0])):
        outcomes = list(entry["tests"].values())
        if any(o is None for o in outcomes):
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        failed = [n.split("::")[-1] for n, o in entry["tests"].items() if o not in ("passed", None)]
        detail = f"  (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {number:>2} {status:<7} {entry['title']}{detail}")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def paper_config():
    from patchlum.config import parse_config

    return parse_config(DATA / "paper_device.json")
