import pytest

_ACCEPTANCE = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def record(ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} {request.node.name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
