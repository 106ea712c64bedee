import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and assert one acceptance criterion.

    Each call prints a single PASS/FAIL/SKIP line immediately (visible
    with -s) and again in the terminal summary. ok=None records a skip.
    """

    def record(label, ok, detail=""):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"{status}  {label}" + (f"  [{detail}]" if detail else "")
        _VERDICTS.append(line)
        print(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
