import os

import pytest

from kerrcat.hilbert import make_basis
from kerrcat.model import default_params

FULL_TIER = os.environ.get("KERRCAT_TIER", "ci").lower() == "full"


def pytest_collection_modifyitems(config, items):
    if FULL_TIER:
        return
    skip = pytest.mark.skip(reason="opt-in tier; set KERRCAT_TIER=full")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def small_basis(params):
    return make_basis(params.K, params.p, 30, 4, 3)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
