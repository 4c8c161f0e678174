import pytest

# filled by tests/test_acceptance.py: (criterion number, passed, detail)
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(num, ok, detail):
        ACCEPTANCE_LINES.append((num, bool(ok), detail))
        print(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record
