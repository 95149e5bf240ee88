from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

# acceptance lines are collected here and echoed after the run so they show
# up in the report even though pytest captures stdout of passing tests
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
