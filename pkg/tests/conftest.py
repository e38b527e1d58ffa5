import pytest

# criterion -> list of (ok, note); filled by the acceptance tests
ACCEPTANCE = {}


@pytest.fixture
def record():
    def rec(criterion, ok, note=""):
        ACCEPTANCE.setdefault(criterion, []).append((bool(ok), note))
        print(f"{criterion} {'PASS' if ok else 'FAIL'} {note}".rstrip())
    return rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        parts = ACCEPTANCE[crit]
        ok = all(p for p, _ in parts)
        notes = "; ".join(n for _, n in parts if n)
        terminalreporter.write_line(f"{crit:>3} {'PASS' if ok else 'FAIL'}  {notes}")
