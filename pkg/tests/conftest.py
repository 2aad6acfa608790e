import pytest

# acceptance tests append "PASS|FAIL <criterion> <detail>" lines here
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    def report(number: int, name: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("]")[0].split("[")[1]):
            terminalreporter.write_line(line)
