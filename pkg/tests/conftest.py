def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], outcome, props.get("title", ""),
                              props.get("seconds")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, outcome, title, secs in sorted(lines):
        took = f" ({secs:.2f}s)" if secs is not None else ""
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'} "
                                    f"criterion {num:2d}: {title}{took}")
