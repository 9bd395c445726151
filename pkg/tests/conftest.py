import numpy as np
import pytest

from dualmeb import _backend

#: Filled by the acceptance tests: criterion number -> (passed, detail).
ACCEPTANCE = {}


@pytest.fixture(params=_backend.available())
def backend(request):
    with _backend.using(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
