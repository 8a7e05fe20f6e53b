def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance criterion at the end of the run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" in getattr(rep, "nodeid", ""):
                rows.append((rep.nodeid.split("::")[-1], status == "passed"))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in sorted(rows):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")
