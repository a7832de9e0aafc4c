"""Shared fixtures: naive set-based oracles and the acceptance verdict log."""

from __future__ import annotations

import numpy as np
import pytest

VERDICTS: list[tuple[str, bool, str]] = []


def naive_step(x: frozenset, width: int, height: int, recovery: bool = True) -> frozenset:
    """Direct transcription of the two update rules on a site set."""
    out = set()
    for a in range(1, width + 1):
        for b in range(1, height + 1):
            k = sum((a + dx, b + dy) in x for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)))
            if k >= 2 or ((a, b) in x and (k >= 1 or not recovery)):
                out.add((a, b))
    return frozenset(out)


def naive_outcome(x: frozenset, width: int, height: int, recovery: bool = True):
    """(kind, t, period) by storing every visited state."""
    seen = {}
    t = 0
    while True:
        if len(x) == width * height:
            return "percolated", t, 0
        if not x:
            return "extinct", t, 0
        if x in seen:
            return "cycle", t, t - seen[x]
        seen[x] = t
        x = naive_step(x, width, height, recovery)
        t += 1


def random_sites(rng: np.random.Generator, width: int, height: int, p: float) -> frozenset:
    ys, xs = np.nonzero(rng.random((height, width)) < p)
    return frozenset(zip((xs + 1).tolist(), (ys + 1).tolist()))


@pytest.fixture
def verdict():
    """Record one acceptance verdict; printed in the terminal summary."""
    def record(name: str, passed: bool, detail: str = "") -> bool:
        VERDICTS.append((name, bool(passed), detail))
        print(f"{name}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(VERDICTS, key=lambda v: int(v[0].split()[1])):
        terminalreporter.write_line(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
