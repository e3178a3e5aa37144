import pytest

import coalgrid.dispatch as dispatch
from support import assert_audit

AUDITED = {"count": 0}


@pytest.fixture(autouse=True, scope="session")
def audit_every_dispatch():
    """Re-audit each decoded dispatch in this process against its own constraints."""
    original = dispatch.decode

    def audited(s, kind, lp, sol, feas_tol=dispatch.FEAS_TOL):
        out = original(s, kind, lp, sol, feas_tol)
        assert_audit(s, out)
        AUDITED["count"] += 1
        return out

    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(dispatch, "decode", audited)
        yield AUDITED


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance-gate criteria")


CRITERIA: list[str] = []


class Criterion:
    """Collects sub-checks for one acceptance criterion and reports a single line."""

    def __init__(self, name: str):
        self.name = name
        self.failures: list[str] = []
        self.notes: list[str] = []

    def check(self, ok: bool, what: str) -> None:
        if not ok:
            self.failures.append(what)

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures[:3] if self.failures else self.notes)
        line = f"[{status}] {self.name}" + (f" -- {detail}" if detail else "")
        CRITERIA.append(line)
        print(line)
        if exc is None and self.failures:
            raise AssertionError(line)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
