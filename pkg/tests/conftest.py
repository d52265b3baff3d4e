import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, detail = results[num]
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}"
        if detail and not ok:
            line += f" - {detail}"
        terminalreporter.write_line(line)
