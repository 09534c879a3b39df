import pytest

from codedgrad.straggler import StragglerParams

_LINES = pytest.StashKey[list]()


@pytest.fixture
def params():
    return StragglerParams(10.0, 0.01)


@pytest.fixture
def verdict(request):
    """Record one acceptance line and fail the test when the check does not hold."""
    lines = request.config.stash.setdefault(_LINES, [])

    def check(label: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
