import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    scorecard = getattr(mod, "SCORECARD", None)
    if scorecard:
        terminalreporter.section("acceptance scorecard")
        for line in sorted(scorecard,
                           key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
