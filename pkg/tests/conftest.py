import pytest

ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance line: ``report(key, ok, detail)``."""

    def _report(key, ok, detail=""):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} {detail}")
