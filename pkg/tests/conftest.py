from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robust_binloc.instance import PROFILES, generate, make_instance  # noqa: E402

I16 = PROFILES["i16"][1]


def tiny(n: int, seed: int = 3, **kw):
    return generate(seed, n, I16, **kw)


@pytest.fixture(scope="session")
def tiny2():
    return tiny(2)


@pytest.fixture(scope="session")
def tiny3():
    return tiny(3)


@pytest.fixture
def line3():
    """Three points on a line at 0, 100 and 200 m."""
    d = [[0, 100, 200], [100, 0, 100], [200, 100, 0]]
    return make_instance([[0.3, 0.1], [0.5, 0.2], [0.2, 0.1]], d, max_distance=150)


# --- acceptance summary ------------------------------------------------------------

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """record(n, title, ok, detail): print one pass/fail line, keep it for the summary, assert ok."""
    def record(n: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        print(line)
        request.config.stash.setdefault(ACCEPTANCE, {})[n] = line
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
