"""Readers for the HAPT smartphone raw-data layout.

``RawData/acc_expEE_userUU.txt`` and ``RawData/gyro_expEE_userUU.txt`` hold
three whitespace-separated columns sampled at 50 Hz; ``RawData/labels.txt``
holds ``experiment user activity start end`` rows with 1-based inclusive
sample bounds.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DatasetMissing, EmptyFile, OutOfRange, ParseError
from .signal_core import Signal

WALKING, WALKING_UPSTAIRS, WALKING_DOWNSTAIRS = 1, 2, 3
WALKING_ACTIVITIES = (WALKING, WALKING_UPSTAIRS, WALKING_DOWNSTAIRS)
ACTIVITY_CODES = {"walking": (1,), "up": (2,), "down": (3,), "mixed": (1, 2, 3)}
SAMPLING_RATE = 50
ENV_ROOT = "GAIT_DATASET_ROOT"
DOWNLOAD_HINT = (
    "Download 'Smartphone-Based Recognition of Human Activities and Postural "
    "Transitions' from the UCI Machine Learning Repository, unzip it and pass "
    f"its directory (or its RawData sub-directory) as --dataset-root or ${ENV_ROOT}."
)

_RAW_NAME = re.compile(r"^acc_exp(\d{2})_user(\d{2})\.txt$")


@dataclass(frozen=True)
class ActivityPeriod:
    experiment_id: int
    user_id: int
    activity_code: int
    start_sample: int
    end_sample: int

    def __post_init__(self):
        if not self.start_sample < self.end_sample:
            raise ValueError(f"empty period {self.start_sample}..{self.end_sample}")

    @property
    def n_samples(self) -> int:
        return self.end_sample - self.start_sample + 1


@dataclass(frozen=True, eq=False)
class TriAxialRecord:
    acc: tuple
    gyr: tuple
    period: ActivityPeriod

    def channel(self, name: str) -> Signal:
        sensor, axis = name.split("_")
        return (self.acc if sensor == "acc" else self.gyr)["xyz".index(axis)]


def load_raw_file(path, sensor: str = "acc") -> tuple[Signal, Signal, Signal]:
    """Three channels of a raw file, positions 1..N."""
    path = Path(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}", path, lineno)
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: not a number in {line.strip()!r}", path, lineno) from None
    if not rows:
        raise EmptyFile(f"{path} holds no samples")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite sample", path)
    pos = np.arange(1, data.shape[0] + 1)
    prefix = "acc" if sensor == "acc" else "gyr"
    return tuple(Signal(pos, data[:, k], f"{prefix}_{ax}") for k, ax in enumerate("xyz"))


def load_labels(path, activities=None) -> list[ActivityPeriod]:
    path = Path(path)
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 columns", path, lineno)
            try:
                exp, user, act, start, end = (int(p) for p in parts)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer field", path, lineno) from None
            if activities is not None and act not in activities:
                continue
            try:
                out.append(ActivityPeriod(exp, user, act, start, end))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}", path, lineno) from None
    return out


def extract_period(acc, gyr, period: ActivityPeriod) -> TriAxialRecord:
    """Slice six channels to the period's inclusive bounds, positions re-based to 1."""
    n = min(len(s) for s in (*acc, *gyr))
    if period.start_sample < 1 or period.end_sample > n:
        raise OutOfRange(
            f"period {period.start_sample}..{period.end_sample} outside 1..{n}"
        )
    a, b = period.start_sample - 1, period.end_sample - 1

    def cut(sig):
        return sig.slice(a, b).rebased(1)

    return TriAxialRecord(tuple(cut(s) for s in acc), tuple(cut(s) for s in gyr), period)


def resolve_root(root=None) -> Path:
    """Locate the RawData directory from ``root`` or ``$GAIT_DATASET_ROOT``."""
    root = root or os.environ.get(ENV_ROOT)
    if not root:
        raise DatasetMissing(f"no dataset root given. {DOWNLOAD_HINT}")
    root = Path(root)
    for cand in (root, root / "RawData"):
        if (cand / "labels.txt").is_file():
            return cand
    raise DatasetMissing(f"no RawData/labels.txt under {root}. {DOWNLOAD_HINT}")


class HaptDataset:
    """Lazy access to one HAPT RawData directory."""

    def __init__(self, root=None):
        self.raw_dir = resolve_root(root)
        self.labels = load_labels(self.raw_dir / "labels.txt")
        self._files = {}
        for f in self.raw_dir.iterdir():
            m = _RAW_NAME.match(f.name)
            if m:
                self._files[(int(m.group(1)), int(m.group(2)))] = f.name

    @property
    def users(self) -> list[int]:
        return sorted({p.user_id for p in self.labels})

    def periods(self, user: int | None = None, activities=WALKING_ACTIVITIES) -> list[ActivityPeriod]:
        return [
            p
            for p in self.labels
            if (user is None or p.user_id == user) and p.activity_code in activities
        ]

    def users_with(self, activities) -> list[int]:
        return sorted({p.user_id for p in self.labels if p.activity_code in activities})

    @lru_cache(maxsize=8)
    def _experiment(self, exp: int, user: int):
        name = self._files.get((exp, user))
        if name is None:
            raise DatasetMissing(f"no raw file for experiment {exp}, user {user}")
        acc = load_raw_file(self.raw_dir / name, "acc")
        gyr = load_raw_file(self.raw_dir / name.replace("acc_", "gyro_", 1), "gyro")
        return acc, gyr

    def record(self, period: ActivityPeriod) -> TriAxialRecord:
        acc, gyr = self._experiment(period.experiment_id, period.user_id)
        return extract_period(acc, gyr, period)
