import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance_lines():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
