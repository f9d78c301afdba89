"""Comparing signals that were sampled on different clocks.

Two recordings of the same movement rarely share sample times. The distance
used throughout this package puts both on the union of their time stamps,
interpolates linearly (holding the end values beyond each signal's extent)
and takes the Euclidean norm of the difference.
"""

import numpy as np

from gaitcut.distance import average_pair, merge_and_interpolate, signal_distance
from gaitcut.signal_core import Signal

# The smallest interesting case: a ramp sampled at 0 and 2, and a single
# zero sample at 1.
a = Signal(np.array([0.0, 2.0]), np.array([0.0, 2.0]))
b = Signal(np.array([1.0]), np.array([0.0]))
grid = merge_and_interpolate(a, b)
print("merged grid      ", grid.z)
print("a on the grid    ", grid.a_on_z)
print("b on the grid    ", grid.b_on_z)
print(f"distance          {signal_distance(a, b):.4f}  (sqrt 5 = {np.sqrt(5):.4f})")

# The same sine sampled at 50 Hz and at an irregular rate is close, but a
# sine shifted by a quarter period is not.
t1 = np.arange(0, 1, 0.02)
t2 = np.sort(np.random.default_rng(0).uniform(0, 1, 37))
s1 = Signal(t1, np.sin(2 * np.pi * t1))
s2 = Signal(t2, np.sin(2 * np.pi * t2))
s3 = Signal(t1, np.cos(2 * np.pi * t1))
print(f"\nsame sine, different clocks  {signal_distance(s1, s2):.4f}")
print(f"sine vs cosine               {signal_distance(s1, s3):.4f}")

# Averaging two signals keeps every time stamp of both; this is how
# archetypes grow when clustering absorbs a cycle.
avg = average_pair(s1, s3)
print(f"\naverage has {len(avg)} samples ({len(s1)} + {len(s3)})")
print(f"it sits between its parents: {signal_distance(avg, s1):.4f} and {signal_distance(avg, s3):.4f}")
