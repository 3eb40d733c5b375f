import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion and assert all of its checks."""

    def record(number, title, checks):
        ok = all(passed for _, _, passed in checks)
        detail = "; ".join(f"{name}={value}{'' if passed else ' (x)'}" for name, value, passed in checks)
        ACCEPTANCE_LINES[number] = f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title} | {detail}"
        failed = [name for name, _, passed in checks if not passed]
        assert not failed, f"criterion {number} failed checks: {', '.join(failed)}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
