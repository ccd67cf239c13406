import pathlib
from collections import defaultdict

import pytest

from thermogap import config as cfgmod

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"

_verdicts = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_verdicts] = defaultdict(list)


@pytest.fixture
def verdict(request):
    """Record a clause of an acceptance criterion; the summary prints one line per criterion."""
    store = request.config.stash[_verdicts]

    def record(criterion: int, ok: bool, detail: str):
        store[criterion].append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_verdicts, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(store):
        clauses = store[criterion]
        ok = all(c[0] for c in clauses)
        detail = "; ".join(("" if c[0] else "FAILED: ") + c[1] for c in clauses)
        terminalreporter.write_line(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def load_cfg():
    def load(name: str) -> dict:
        return cfgmod.load_config(CONFIGS / name)
    return load
