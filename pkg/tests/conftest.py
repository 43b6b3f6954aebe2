import pytest

from dsm_autopilot.cli import cmd_compare

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one line per acceptance criterion; printed in the terminal summary."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}  {detail}")


@pytest.fixture(scope="session")
def default_compare_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("compare_default")
    assert cmd_compare(None, out) == 0
    return out
