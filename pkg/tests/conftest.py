"""Shared brute-force oracles.

These stay deliberately independent of the library code paths they check:
permanents and determinants by explicit permutation sums, hafnians by
recursive expansion on submatrices.
"""

from itertools import permutations

import numpy as np
import pytest


def permanent_bruteforce(a: np.ndarray) -> complex:
    n = a.shape[0]
    total = 0j
    for perm in permutations(range(n)):
        prod = 1.0 + 0j
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += prod
    return total


def determinant_bruteforce(a: np.ndarray) -> complex:
    n = a.shape[0]
    total = 0j
    for perm in permutations(range(n)):
        sign = _parity(perm)
        prod = 1.0 + 0j
        for i, j in enumerate(perm):
            prod *= a[i, j]
        total += sign * prod
    return total


def _parity(perm) -> int:
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def hafnian_recursive(b: np.ndarray) -> complex:
    n = b.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for j in range(1, n):
        sub = np.delete(np.delete(b, (0, j), axis=0), (0, j), axis=1)
        total += b[0, j] * hafnian_recursive(sub)
    return total


def random_complex(rng, n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


@pytest.fixture
def rng():
    return np.random.default_rng(20250814)


# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
