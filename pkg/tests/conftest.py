import functools
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from levi_loewy.modules import Context  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def ctx_for(cartan_type: str, levi: tuple, p: int) -> Context:
    return Context(cartan_type, list(levi), p)


@pytest.fixture(scope="session")
def sl2_3():
    return ctx_for("A1", (0,), 3)


@pytest.fixture(scope="session")
def sl2_5():
    return ctx_for("A1", (0,), 5)


@pytest.fixture(scope="session")
def sl3():
    return ctx_for("A2", (0,), 5)


@pytest.fixture(scope="session")
def so5():
    return ctx_for("B2", (1,), 5)


# -- one summary line per acceptance criterion -------------------------------------------------

_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed and not rep.skipped):
        return
    n, title = mark.args
    if rep.skipped:
        status = "SKIP"
        detail = str(rep.longrepr[2]) if isinstance(rep.longrepr, tuple) else ""
    elif rep.failed:
        status = "FAIL"
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else ""
    else:
        status = "PASS"
        detail = ""
    if rep.when == "call" or status != "PASS":
        _CRITERIA[n] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[n]
        line = f"criterion {n:>2} {status:4}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
