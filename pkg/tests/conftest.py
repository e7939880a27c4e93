import pytest

_LINES_KEY = pytest.StashKey[list]()
_TABLES_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []
    config.stash[_TABLES_KEY] = {}


@pytest.fixture
def acceptance_log(request):
    """Collects one summary line per criterion plus any regression tables."""
    config = request.config

    def record(line, table=None, title=None):
        config.stash[_LINES_KEY].append(line)
        print(line)
        if table:
            config.stash[_TABLES_KEY][title or line] = table

    return record


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if not lines:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in lines:
        tr.write_line(line)
    for title, rows in config.stash.get(_TABLES_KEY, {}).items():
        tr.write_line("")
        tr.write_line(title)
        cols = list(rows[0])
        tr.write_line("  ".join(f"{c:>20}" for c in cols))
        for r in rows:
            tr.write_line("  ".join(f"{_fmt(r[c]):>20}" for c in cols))
