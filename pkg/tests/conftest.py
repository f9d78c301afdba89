import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gaitcut.signal_core import Signal  # noqa: E402
from gaitcut.synthetic import write_synthetic_hapt  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("hapt")
    write_synthetic_hapt(root, n_users=6, periods_per_user=2, cycles_per_period=12, seed=0)
    return root


@pytest.fixture(scope="session")
def synthetic_mixed_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("hapt_mixed")
    write_synthetic_hapt(root, n_users=4, periods_per_user=1, activities=(1, 2, 3), seed=3)
    return root


def sig(values, positions=None, channel=None):
    values = np.asarray(values, dtype=float)
    if positions is None:
        positions = np.arange(values.size)
    return Signal(np.asarray(positions, dtype=float), values, channel)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, passed, detail: str) -> None:
    """Queue one acceptance line; ``passed`` is True, False or None (skipped)."""
    tag = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
    ACCEPTANCE_LINES.append(f"{tag} criterion {criterion:2d}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
