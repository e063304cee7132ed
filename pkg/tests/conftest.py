from __future__ import annotations

import itertools

import numpy as np
import pytest

from qubocompress.core import QuboInstance

THREE_VAR = [[-1.0, 0.4, 1.0], [0.0, 0.4, -0.8], [0.0, 0.0, -1.5]]


@pytest.fixture
def three_var() -> QuboInstance:
    return QuboInstance(np.array(THREE_VAR))


def naive_energy(m, x) -> float:
    """Double loop over i <= j; deliberately independent of the library code."""
    n = len(x)
    return sum(m[i][j] * x[i] * x[j] for i in range(n) for j in range(i, n))


def naive_minima(m):
    """All vectors with their energies, and the minimum, by plain itertools enumeration."""
    n = len(m)
    table = {x: naive_energy(m, x) for x in itertools.product((0, 1), repeat=n)}
    return table, min(table.values())


def random_upper(rng, n, low=-0.5, high=0.5):
    return QuboInstance(np.triu(rng.uniform(low, high, size=(n, n))))


ACCEPTANCE_LINES: list[str] = []


def acceptance_report(label: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
