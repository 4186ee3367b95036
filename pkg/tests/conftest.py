import pytest

_ACCEPTANCE: list = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion: prints its PASS/FAIL line and asserts it."""

    def record(label: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1][1:].rstrip(":"))):
            terminalreporter.write_line(line)
