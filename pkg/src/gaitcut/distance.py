"""Distance between two sampled signals on their merged time grid.

Both signals are linearly interpolated onto the sorted union of their sample
positions (duplicates kept), held constant beyond their own ends, and the
Euclidean norm of the pointwise gap is the distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySignal
from .signal_core import Signal


@dataclass(frozen=True, eq=False)
class MergedGrid:
    z: np.ndarray
    a_on_z: np.ndarray
    b_on_z: np.ndarray

    def __len__(self):
        return int(self.z.size)


def _interp(z, positions, values):
    # np.interp holds the end values outside [positions[0], positions[-1]]
    if positions.size == 1:
        return np.full(z.shape, values[0], dtype=float)
    return np.interp(z, positions, values)


def merge_and_interpolate(a: Signal, b: Signal) -> MergedGrid:
    if len(a) == 0 or len(b) == 0:
        raise EmptySignal("distance needs two non-empty signals")
    z = np.sort(np.concatenate((a.positions, b.positions)).astype(float), kind="stable")
    return MergedGrid(z, _interp(z, a.positions, a.values), _interp(z, b.positions, b.values))


def signal_distance(a: Signal, b: Signal) -> float:
    grid = merge_and_interpolate(a, b)
    gap = grid.a_on_z - grid.b_on_z
    return float(np.sqrt(np.dot(gap, gap)))


def average_pair(a: Signal, b: Signal) -> Signal:
    """Pointwise mean of ``a`` and ``b`` on their merged grid."""
    grid = merge_and_interpolate(a, b)
    channel = a.channel if a.channel == b.channel else None
    return Signal(grid.z, (grid.a_on_z + grid.b_on_z) / 2.0, channel)
