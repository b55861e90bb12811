import dataclasses

import numpy as np
import pytest

from advlsh.datasets import Dataset, gen_zero
from advlsh.index import ConcatHash, LshIndex, derive_params


def bits(s: str) -> np.ndarray:
    return np.array([int(ch) for ch in s], dtype=np.uint8)


def empty_index(dataset: Dataset, r: int = 30, c: float = 2.0):
    """Index with no hash functions at all: every query gets no answer."""
    params = derive_params(max(dataset.n, 2), dataset.d, r, c, 1.0)
    return LshIndex(dataset, params, [])


def fixed_index(dataset: Dataset, coords, r: int, c: float = 2.0, lam: float = 1.0):
    """Index with hand-picked hash functions (each a list of coordinates)."""
    k = len(coords[0])
    params = derive_params(max(dataset.n, 2), dataset.d, r, c, lam)
    params = dataclasses.replace(params, k=k, L=len(coords))
    hashes = [ConcatHash(np.asarray(cs, dtype=np.int64)) for cs in coords]
    return LshIndex(dataset, params, hashes)


@pytest.fixture
def zero300():
    return gen_zero(1000, 300)


@pytest.fixture
def default_params():
    return derive_params(1000, 300, 30, 2.0, 4.0)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one ``[PASS]``/``[FAIL]`` line per criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def report(label: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        lines.append(line)
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("C", 1)[1].split(" ", 1)[0])):
            terminalreporter.write_line(line)
