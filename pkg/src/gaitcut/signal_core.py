"""Signal container, normalization, minimal-peak detection and peak angles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryPoint, ConstantSignal, EmptySignal, NoPeaks

CHANNELS = ("acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z")

# detector settings for the [0, 1]-scaled, zero-mean signal
DEPTH_BAND = (0.1, 0.5)
MIN_SEPARATION = 10
# slack on the depth band edges; a symmetric waveform puts its deepest
# valley at exactly mean(scaled) == 0.5 and rounding must not drop it
_BAND_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class Signal:
    """Samples ``values`` taken at non-decreasing ``positions``.

    Raw sensor signals have strictly increasing integer positions. Signals
    produced by merging grids (see :func:`gaitcut.distance.average_pair`)
    may repeat a position, so only non-decreasing order is enforced here.
    """

    positions: np.ndarray
    values: np.ndarray
    channel: str | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions)
        val = np.asarray(self.values, dtype=float)
        if pos.ndim != 1 or val.ndim != 1:
            raise ValueError("positions and values must be 1-d")
        if pos.shape != val.shape:
            raise ValueError(
                f"positions ({pos.size}) and values ({val.size}) differ in length"
            )
        if not np.all(np.isfinite(val)):
            raise ValueError("values must be finite")
        if pos.size > 1 and np.any(np.diff(pos) < 0):
            raise ValueError("positions must be non-decreasing")
        if self.channel is not None and self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_values(cls, values, start=0, channel=None) -> "Signal":
        values = np.asarray(values, dtype=float)
        return cls(np.arange(start, start + values.size), values, channel)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def duration(self):
        return self.positions[-1] - self.positions[0] if len(self) else 0

    def slice(self, start: int, stop: int) -> "Signal":
        """Samples with array index in ``[start, stop]`` (both inclusive)."""
        return Signal(
            self.positions[start : stop + 1], self.values[start : stop + 1], self.channel
        )

    def rebased(self, origin=0) -> "Signal":
        """Same samples, time axis shifted so the first position is ``origin``."""
        if not len(self):
            return self
        return Signal(self.positions - self.positions[0] + origin, self.values, self.channel)

    def reversed(self) -> "Signal":
        """Time reversal about the signal's own span."""
        pos = self.positions[0] + self.positions[-1] - self.positions[::-1]
        return Signal(pos, self.values[::-1].copy(), self.channel)

    def with_channel(self, channel) -> "Signal":
        return Signal(self.positions, self.values, channel)


@dataclass(frozen=True, eq=False)
class NormalizedSignal(Signal):
    stage: str = "scaled"


@dataclass(frozen=True, eq=False)
class PeakSet:
    """Minimal peaks of a signal.

    ``indices`` index the sample arrays; ``positions`` and ``values`` are
    read from the raw signal at those indices.
    """

    indices: np.ndarray
    positions: np.ndarray
    values: np.ndarray
    angles: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return int(self.indices.size)

    def with_angles(self, angles) -> "PeakSet":
        angles = np.asarray(angles, dtype=float)
        if angles.size != self.indices.size:
            raise ValueError("one angle per peak is required")
        return PeakSet(self.indices, self.positions, self.values, angles)


def scale_to_unit(signal: Signal) -> NormalizedSignal:
    if len(signal) < 2:
        raise EmptySignal("scaling needs at least two samples")
    lo = signal.values.min()
    hi = signal.values.max()
    if hi == lo:
        raise ConstantSignal(f"constant signal (value {lo!r})")
    scaled = (signal.values - lo) / (hi - lo)
    return NormalizedSignal(signal.positions, scaled, signal.channel, stage="scaled")


def shift_to_zero_mean(signal: NormalizedSignal) -> NormalizedSignal:
    if getattr(signal, "stage", None) != "scaled":
        raise ValueError("expected a signal from scale_to_unit")
    shifted = signal.values - signal.values.mean()
    return NormalizedSignal(signal.positions, shifted, signal.channel, stage="zero_mean")


def local_minima(values: np.ndarray) -> np.ndarray:
    """Indices of interior local minima; a flat valley yields its midpoint.

    A run of equal samples counts as one minimum when both neighbouring
    samples are strictly higher; the reported index is the floor of the run's
    mean index.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 3:
        return np.empty(0, dtype=np.int64)
    # collapse runs of equal values
    change = np.flatnonzero(np.diff(x) != 0) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change - 1, [n - 1]))
    run_vals = x[starts]
    inner = np.arange(1, starts.size - 1)
    if inner.size == 0:
        return np.empty(0, dtype=np.int64)
    is_min = (run_vals[inner - 1] > run_vals[inner]) & (run_vals[inner + 1] > run_vals[inner])
    sel = inner[is_min]
    return ((starts[sel] + ends[sel]) // 2).astype(np.int64)


def _enforce_separation(candidates: np.ndarray, depth: np.ndarray, min_sep: int) -> np.ndarray:
    # deepest first, earlier index on ties
    order = np.lexsort((candidates, -depth))
    kept: list[int] = []
    for k in order:
        idx = candidates[k]
        if all(abs(idx - j) >= min_sep for j in kept):
            kept.append(int(idx))
    return np.array(sorted(kept), dtype=np.int64)


def detect_minimal_peaks(
    signal: NormalizedSignal,
    raw: Signal,
    depth_band=DEPTH_BAND,
    min_separation: int = MIN_SEPARATION,
) -> PeakSet:
    """Minimal peaks of a zero-mean normalized signal.

    A candidate is an interior local minimum whose depth below zero lies in
    ``depth_band``; candidates closer than ``min_separation`` samples are
    pruned, the deeper one surviving. Values are read from ``raw``.
    """
    if getattr(signal, "stage", None) != "zero_mean":
        raise ValueError("expected a signal from shift_to_zero_mean")
    if len(raw) != len(signal):
        raise ValueError("raw and normalized signals differ in length")
    cand = local_minima(signal.values)
    depth = -signal.values[cand]
    lo, hi = depth_band
    ok = (depth >= lo - _BAND_EPS) & (depth <= hi + _BAND_EPS)
    cand, depth = cand[ok], depth[ok]
    if cand.size == 0:
        raise NoPeaks("no minimal peak within the depth band")
    kept = _enforce_separation(cand, depth, min_separation)
    return PeakSet(kept, raw.positions[kept], raw.values[kept])


def peak_angle(raw: Signal, index: int) -> float:
    """Opening angle (radians) at sample ``index`` between its two neighbours.

    Neighbours sit one unit left and right on the time axis, so the angle
    depends only on the two vertical rises.
    """
    n = len(raw)
    if index <= 0 or index >= n - 1:
        raise BoundaryPoint(f"sample {index} has no neighbour on both sides")
    y = raw.values[index]
    left = raw.values[index - 1] - y
    right = raw.values[index + 1] - y
    cos_a = (left * right - 1.0) / np.sqrt((left * left + 1.0) * (right * right + 1.0))
    return float(np.arccos(np.clip(cos_a, -1.0, 1.0)))
