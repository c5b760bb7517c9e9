import pytest

from snowdyn import builtin
from snowdyn import snowcomb as sc

# filled by tests/test_acceptance.py; printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def rhat():
    return builtin("rhat")


@pytest.fixture(scope="session")
def rhat_sym():
    return builtin("rhat_sym")


@pytest.fixture(scope="session")
def lattes():
    return builtin("lattes_2222")


@pytest.fixture(scope="session")
def main29():
    return sc.build_generator(sc.load_generator_spec("main_29"))


@pytest.fixture(scope="session")
def main29_complex(main29):
    return sc.subdivide(main29, 3)
