import re
from importlib import resources
from pathlib import Path

import pytest

from barrierfix import parse_file

CORPUS = Path(str(resources.files("barrierfix").joinpath("corpus")))
CORPUS_NAMES = sorted(p.stem for p in CORPUS.glob("*.mk"))


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.mk"


def corpus_kernel(name: str):
    return parse_file(str(corpus_path(name)))


@pytest.fixture(params=CORPUS_NAMES)
def corpus_name(request):
    return request.param


# -- one line per acceptance criterion --------------------------------------------

_criteria = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    failed = report.failed or (report.when == "call" and not report.passed)
    if report.when == "call" or failed:
        _criteria[key] = _criteria.get(key, True) and not failed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), ok in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {n:2d} {name:<28} {'PASS' if ok else 'FAIL'}")
