import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_results = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    k, title = mark.args
    expected = item.get_closest_marker("xfail") is not None
    if call.excinfo is None:
        outcome = "xpass" if expected else "pass"
    else:
        outcome = "xfail" if expected else "fail"
    note = getattr(item.module, "NOTES", {}).get(item.name, "")
    _results.setdefault((k, title), []).append((item.name, outcome, note))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (k, title), rows in sorted(_results.items()):
        outcomes = {o for _, o, _ in rows}
        if "fail" in outcomes or "xpass" in outcomes:
            verdict = "FAIL"
        elif "xfail" in outcomes:
            verdict = "PASS with expected failures" if "pass" in outcomes else "XFAIL"
        else:
            verdict = "PASS"
        tr.write_line(f"criterion {k:2d} {title}: {verdict}")
        for name, o, note in rows:
            tr.write_line(f"    {o:5s} {name}" + (f"  [{note}]" if note else ""))
