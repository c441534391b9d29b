ACCEPTANCE_RESULTS = []


def record_acceptance(name: str, ok: bool):
    ACCEPTANCE_RESULTS.append((name, bool(ok)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, ok in ACCEPTANCE_RESULTS:
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"  ACCEPTANCE {verdict}: {name}")
