import pytest

# criterion number -> [(sub-check label, passed, detail)]
_CRITERIA: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def criterion():
    def record(number: int, label: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA.setdefault(number, []).append((label, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        subs = _CRITERIA[number]
        ok = all(s[1] for s in subs)
        failed = [f"{label} [{detail}]" for label, good, detail in subs if not good]
        note = f" (failed: {'; '.join(failed)})" if failed else ""
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {len(subs)} sub-check(s){note}")
