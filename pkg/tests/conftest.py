"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    crit = props.get("criterion")
    if crit is None:
        return
    entry = _CRITERIA.setdefault(crit, {"ok": True, "detail": []})
    if report.failed:
        entry["ok"] = False
    if report.when == "call" and props.get("detail"):
        entry["detail"].append(props["detail"])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA, key=int):
        e = _CRITERIA[crit]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(e["detail"])
        terminalreporter.write_line(f"criterion {crit:>2}: {status}  {detail}")
