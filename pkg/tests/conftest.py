import pytest

from zodiac import data, language

# acceptance lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def z340():
    return data.z340()


@pytest.fixture(scope="session")
def z408():
    return data.z408()


@pytest.fixture(scope="session")
def model5():
    return language.english_model(5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
