import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        line, detail = results[num]
        terminalreporter.write_line(line)
        terminalreporter.write_line(f"  {detail}")
