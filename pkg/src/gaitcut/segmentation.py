"""Cutting a walking signal into gait cycles.

Pipeline: minimal peaks of the normalized signal (pre-cuts), angle filtering
(finer cuts), choice of a best cycle from the cycle-length histogram, then a
walk to the left and to the right of the best cycle that accepts, skips or
subdivides the remaining finer cuts. :func:`tune` grid-searches the three
hyper-parameters against :func:`segmentation_score`.

Everything below works on array indices of the raw signal; positions are only
looked up when a result is materialized.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .distance import signal_distance
from .errors import (
    AllCandidatesFailed,
    GaitError,
    GridMismatch,
    TooFewCuts,
    TooFewCycles,
    ZeroVariance,
)
from .signal_core import (
    PeakSet,
    Signal,
    detect_minimal_peaks,
    peak_angle,
    scale_to_unit,
    shift_to_zero_mean,
)

CORRELATION_POINTS = 64
BEST_CYCLE_BAND = (0.8, 1.2)
ACCEPT_BAND = (0.95, 1.05)
MAX_RELAXATIONS = 6


@dataclass(frozen=True)
class HyperParams:
    """Segmentation hyper-parameters.

    d_hy: hypothesized cycle length in samples.
    beta_hy: minimum correlation for a new cycle against its neighbour;
        negative values accept every candidate.
    l_hy: half-width of the window in which inserted cuts snap to a minimum.
    shift_radius: half-width of the shift range used by the score.
    """

    d_hy: float
    beta_hy: float = -1.0
    l_hy: int = 10
    shift_radius: int = 5

    def __post_init__(self):
        if not self.d_hy >= 4:
            raise ValueError(f"d_hy must be >= 4, got {self.d_hy}")
        if not -1.0 <= self.beta_hy <= 1.0:
            raise ValueError(f"beta_hy must lie in [-1, 1], got {self.beta_hy}")
        if self.l_hy < 0 or self.shift_radius < 0:
            raise ValueError("l_hy and shift_radius must be non-negative")


@dataclass(frozen=True)
class SegmentationGrid:
    d_hy: tuple = (40, 45, 50, 55, 60)
    beta_hy: tuple = (-1.0,)
    l_hy: tuple = (5, 10, 15)
    shift_radius: int = 5

    def __post_init__(self):
        for name in ("d_hy", "beta_hy", "l_hy"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"grid axis {name} is empty")
            object.__setattr__(self, name, vals)

    def points(self):
        for d, b, l in itertools.product(self.d_hy, self.beta_hy, self.l_hy):
            yield HyperParams(d, b, l, self.shift_radius)

    def halved(self) -> "SegmentationGrid":
        """Grid for half-cycle segmentation."""
        return replace(self, d_hy=tuple(d / 2 for d in self.d_hy))


WALKING_DETECTION_BETAS = (0.5, 0.7, 0.9)


@dataclass(frozen=True, eq=False)
class FinerCuts:
    indices: np.ndarray
    positions: np.ndarray
    values: np.ndarray
    quantile: float
    peaks: PeakSet | None = None

    def __len__(self):
        return int(self.indices.size)

    def every_other(self) -> "FinerCuts":
        return FinerCuts(
            self.indices[::2], self.positions[::2], self.values[::2], self.quantile, self.peaks
        )

    @classmethod
    def from_indices(cls, raw: Signal, indices, quantile=1.0, peaks=None) -> "FinerCuts":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("cut indices must be strictly increasing")
        return cls(idx, raw.positions[idx], raw.values[idx], quantile, peaks)


@dataclass(frozen=True, eq=False)
class CycleLengthHistogram:
    lengths: np.ndarray
    counts: np.ndarray
    edges: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0


@dataclass(frozen=True, eq=False)
class BestCycle:
    """Template cycle chosen from the finer cuts.

    ``d_be`` is the target length the search settled on; ``length`` is the
    actual span of the chosen cycle. They differ when the search gave up and
    fell back to the hypothesized length.
    """

    start: int
    end: int
    d_be: float
    cuts: FinerCuts
    index: int
    cycle: Signal
    capped: bool = False

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(eq=False)
class Segmentation:
    cut_indices: np.ndarray
    cut_positions: np.ndarray
    cut_values: np.ndarray
    cycles: list
    params: HyperParams | None = None
    score: float | None = None
    n_samples: int = 0

    @classmethod
    def from_indices(cls, raw: Signal, indices, params=None, score=None) -> "Segmentation":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size < 2:
            raise TooFewCuts("a segmentation needs at least two cuts")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("cut indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= len(raw):
            raise ValueError("cut outside the signal")
        cycles = [raw.slice(a, b) for a, b in zip(idx[:-1], idx[1:])]
        return cls(idx, raw.positions[idx], raw.values[idx], cycles, params, score, len(raw))

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.cut_indices)

    @property
    def span(self) -> int:
        return int(self.cut_indices[-1] - self.cut_indices[0])


# ---------------------------------------------------------------- pre/finer cuts


def precut(raw: Signal) -> PeakSet:
    zero_mean = shift_to_zero_mean(scale_to_unit(raw))
    peaks = detect_minimal_peaks(zero_mean, raw)
    return peaks.with_angles([peak_angle(raw, int(i)) for i in peaks.indices])


def finer_cuts(peaks: PeakSet, quantile: float = 0.5) -> FinerCuts:
    """Keep the pre-cuts whose angle is at least the ``quantile`` of all angles."""
    if len(peaks) == 0:
        raise TooFewCuts("no pre-cuts to filter")
    if peaks.angles.size != len(peaks):
        raise ValueError("pre-cut angles are missing")
    q = min(max(quantile, 0.0), 1.0)
    keep = peaks.angles >= np.quantile(peaks.angles, q)
    if np.count_nonzero(keep) < 2:
        raise TooFewCuts(f"only {np.count_nonzero(keep)} finer cut(s) at quantile {q:.2f}")
    return FinerCuts(
        peaks.indices[keep], peaks.positions[keep], peaks.values[keep], q, peaks
    )


def cycle_length_histogram(cuts: FinerCuts) -> CycleLengthHistogram:
    if len(cuts) < 2:
        raise TooFewCuts("a cycle needs two cuts")
    lengths = np.diff(cuts.indices)
    n_bins = max(1, math.ceil(math.sqrt(lengths.size)))
    counts, edges = np.histogram(lengths, bins=n_bins)
    return CycleLengthHistogram(lengths, counts, edges)


# ---------------------------------------------------------------- best cycle


def _modal_length(hist: CycleLengthHistogram) -> float:
    return float(hist.centers[int(np.argmax(hist.counts))])


def find_best_cycle(cuts: FinerCuts, raw: Signal, d_hy: float) -> BestCycle:
    lo, hi = BEST_CYCLE_BAND[0] * d_hy, BEST_CYCLE_BAND[1] * d_hy
    hist = cycle_length_histogram(cuts)

    d_be = None
    for count, center in zip(hist.counts, hist.centers):
        if count > 0 and lo <= center <= hi:
            d_be = float(center)
            break
    if d_be is None:
        d_be = _modal_length(hist)

    capped = False
    relaxation = 1
    while not lo <= d_be <= hi:
        if d_be < lo:
            if len(cuts) < 3:
                # nothing left to merge
                d_be, capped = float(d_hy), True
                break
            cuts = cuts.every_other()
        else:
            if relaxation == MAX_RELAXATIONS or cuts.peaks is None:
                d_be, capped = float(d_hy), True
                break
            cuts = finer_cuts(cuts.peaks, 0.5 - relaxation * 0.1)
            relaxation += 1
        hist = cycle_length_histogram(cuts)
        d_be = _modal_length(hist)

    i_min = int(np.argmin(np.abs(hist.lengths - d_be)))
    start, end = int(cuts.indices[i_min]), int(cuts.indices[i_min + 1])
    return BestCycle(start, end, d_be, cuts, i_min, raw.slice(start, end), capped)


# ---------------------------------------------------------------- correlation


def _resample(values: np.ndarray, n_points: int) -> np.ndarray:
    x = np.arange(values.size, dtype=float)
    return np.interp(np.linspace(0.0, x[-1], n_points), x, values)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise ZeroVariance("cycle is constant after resampling")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def correlation(a: Signal, b: Signal, n_points: int = CORRELATION_POINTS) -> float:
    """Pearson correlation of two cycles after stretching both to ``n_points``.

    Each cycle is linearly resampled over its own duration, so cycles of
    different lengths are compared phase by phase.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("correlation needs at least two samples per cycle")
    ra = np.interp(np.linspace(a.positions[0], a.positions[-1], n_points), a.positions, a.values)
    rb = np.interp(np.linspace(b.positions[0], b.positions[-1], n_points), b.positions, b.values)
    return _pearson(ra, rb)


def _passes_gate(candidate: np.ndarray, template: np.ndarray, beta: float) -> bool:
    try:
        r = _pearson(_resample(candidate, CORRELATION_POINTS), _resample(template, CORRELATION_POINTS))
    except ZeroVariance:
        r = 0.0
    return r >= beta


# ---------------------------------------------------------------- extension


def _snap(values: np.ndarray, target: float, radius: int, lo: int, hi: int) -> int | None:
    centre = int(math.floor(target + 0.5))
    a = max(lo, centre - radius)
    b = min(hi, centre + radius)
    if b < a:
        return None
    return a + int(np.argmin(values[a : b + 1]))


def _walk_left(values: np.ndarray, cuts: np.ndarray, i_min: int, beta: float, l_hy: int) -> list[int]:
    """Cuts from the left end of the walk up to the best cycle's end."""
    X = deque([int(cuts[i_min]), int(cuts[i_min + 1])])

    def mean_length():
        return (X[-1] - X[0]) / (len(X) - 1)

    def accept(start):
        template = values[X[0] : X[1] + 1]
        if not _passes_gate(values[start : X[0] + 1], template, beta):
            return False
        X.appendleft(int(start))
        return True

    lo_f, hi_f = ACCEPT_BAND
    p = i_min
    while p > 0:
        d_be = mean_length()
        total = X[0] - int(cuts[p - 1])
        if lo_f * d_be <= total <= hi_f * d_be:
            if not accept(cuts[p - 1]):
                return list(X)
            p -= 1
        elif total < lo_f * d_be:
            p -= 1
        else:
            c = _snap(values, X[0] - d_be, l_hy, 0, X[0] - 2)
            if c is None or not accept(c):
                return list(X)

    # finer cuts exhausted: keep stepping toward the signal start
    while True:
        d_be = mean_length()
        if X[0] < d_be:
            break
        c = _snap(values, X[0] - d_be, l_hy, 0, X[0] - 2)
        if c is None or not accept(c):
            break
    return list(X)


def _walk_right(values: np.ndarray, cuts: np.ndarray, i_min: int, beta: float, l_hy: int) -> list[int]:
    last = values.size - 1
    mirrored = _walk_left(values[::-1], (last - cuts)[::-1], cuts.size - 2 - i_min, beta, l_hy)
    return [last - i for i in reversed(mirrored)]


def _locate(best: BestCycle, cuts: FinerCuts | None) -> tuple[np.ndarray, int]:
    if cuts is None or cuts is best.cuts:
        return best.cuts.indices, best.index
    idx = cuts.indices
    i = int(np.searchsorted(idx, best.start))
    if i + 1 >= idx.size or idx[i] != best.start or idx[i + 1] != best.end:
        raise ValueError("best cycle is not delimited by two neighbouring cuts")
    return idx, i


def extend_left(best: BestCycle, cuts: FinerCuts | None, raw: Signal, params: HyperParams) -> Segmentation:
    """Cycles from the best cycle back toward the start of ``raw``.

    The returned segmentation ends with the best cycle. ``cuts`` defaults to
    the (possibly renewed) finer cuts the best cycle was picked from.
    """
    idx, i_min = _locate(best, cuts)
    cut_idx = _walk_left(raw.values, idx, i_min, params.beta_hy, int(params.l_hy))
    return Segmentation.from_indices(raw, cut_idx, params)


def extend_right(best: BestCycle, cuts: FinerCuts | None, raw: Signal, params: HyperParams) -> Segmentation:
    """Mirror image of :func:`extend_left`; starts with the best cycle."""
    idx, i_min = _locate(best, cuts)
    cut_idx = _walk_right(raw.values, idx, i_min, params.beta_hy, int(params.l_hy))
    return Segmentation.from_indices(raw, cut_idx, params)


# ---------------------------------------------------------------- full pipeline


def segment(raw: Signal, params: HyperParams) -> Segmentation:
    peaks = precut(raw)
    best = find_best_cycle(finer_cuts(peaks), raw, params.d_hy)
    left = extend_left(best, None, raw, params).cut_indices
    right = extend_right(best, None, raw, params).cut_indices
    seg = Segmentation.from_indices(raw, np.concatenate((left, right[2:])), params)
    if seg.n_cycles >= 2:
        seg.score = segmentation_score(raw, seg, params.shift_radius)
    return seg


def _shift_range(half_span: float, radius: int) -> range:
    lo = math.ceil(half_span - radius)
    hi = math.floor(half_span + radius)
    if lo > hi:
        lo = hi = int(math.floor(half_span + 0.5))
    return range(lo, hi + 1)


def segmentation_score(raw: Signal, seg: Segmentation, shift_radius: int = 5) -> float:
    """Sum over neighbouring cycle pairs of the best shifted-window distance.

    For cycles ``[x_i, x_{i+1}]`` and ``[x_{i+1}, x_{i+2}]`` the window
    ``[x_i + n, x_{i+1} + n]`` is compared with the second cycle for every
    integer shift ``n`` within ``shift_radius`` of half the pair's span.
    Windows are clipped to the signal and both sides are placed on a common
    time origin before measuring.
    """
    x = seg.cut_indices
    if x.size - 1 < 2:
        raise TooFewCycles("score needs at least two cycles")
    values = raw.values
    last = values.size - 1
    total = 0.0
    for i in range(x.size - 2):
        ref_vals = values[x[i + 1] : x[i + 2] + 1]
        ref = Signal(np.arange(ref_vals.size), ref_vals)
        best = math.inf
        for n in _shift_range((x[i + 2] - x[i]) / 2.0, shift_radius):
            a = max(0, x[i] + n)
            b = min(last, x[i + 1] + n)
            if b < a:
                continue
            win = Signal(np.arange(b - a + 1), values[a : b + 1])
            best = min(best, signal_distance(win, ref))
        if math.isfinite(best):
            total += best
    return total


@dataclass
class GridResult:
    params: HyperParams
    segmentation: Segmentation | None = None
    error: GaitError | None = None

    @property
    def score(self):
        return None if self.segmentation is None else self.segmentation.score


def _evaluate_point(raw: Signal, params: HyperParams) -> GridResult:
    try:
        seg = segment(raw, params)
    except GaitError as exc:
        return GridResult(params, error=exc)
    if seg.score is None:
        return GridResult(params, error=TooFewCycles(f"only {seg.n_cycles} cycle"))
    return GridResult(params, seg)


def grid_scores(raw: Signal, grid: SegmentationGrid, jobs: int | None = None) -> list[GridResult]:
    """Segment ``raw`` at every grid point; failures are kept with their error."""
    points = list(grid.points())
    if jobs and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda p: _evaluate_point(raw, p), points))
    return [_evaluate_point(raw, p) for p in points]


def _tie_key(result: GridResult):
    p = result.params
    return (result.score, p.d_hy, p.l_hy, -p.beta_hy)


def tune(raw: Signal, grid: SegmentationGrid | None = None, jobs: int | None = None):
    """Grid search; returns ``(params, segmentation)`` with the lowest score.

    Ties go to the smaller ``d_hy``, then smaller ``l_hy``, then larger
    ``beta_hy``.
    """
    results = grid_scores(raw, grid or SegmentationGrid(), jobs)
    ok = [r for r in results if r.segmentation is not None]
    if not ok:
        raise AllCandidatesFailed(
            f"all {len(results)} grid points failed", [(r.params, r.error) for r in results]
        )
    best = min(ok, key=_tie_key)
    return best.params, best.segmentation


def iterative_segment(raw: Signal, params: HyperParams, min_cycles: int = 2) -> list[Segmentation]:
    """Repeatedly segment the parts of ``raw`` not yet covered.

    Meant for signals mixing several walking types; with a positive
    ``beta_hy`` each run stops where the cycles stop resembling each other.
    Results come back ordered by start and are indexed against ``raw``.
    """
    if params.beta_hy <= 0:
        raise ValueError("iterative segmentation needs beta_hy > 0")
    found: list[Segmentation] = []
    pending = [(0, len(raw) - 1)]
    min_len = max(3, int(math.ceil(BEST_CYCLE_BAND[0] * params.d_hy)))
    while pending:
        a, b = pending.pop()
        if b - a + 1 < 2 * min_len:
            continue
        piece = raw.slice(a, b)
        try:
            seg = segment(piece, params)
        except GaitError:
            continue
        if seg.n_cycles < min_cycles:
            continue
        found.append(Segmentation.from_indices(raw, seg.cut_indices + a, params, seg.score))
        pending.append((a, a + int(seg.cut_indices[0])))
        pending.append((a + int(seg.cut_indices[-1]), b))
    found.sort(key=lambda s: int(s.cut_indices[0]))
    return found


def apply_cuts(other: Signal, seg: Segmentation) -> list[Signal]:
    """Cut ``other`` at the positions of ``seg`` (e.g. gyroscope by accelerometer cuts)."""
    idx = seg.cut_indices
    if len(other) <= idx[-1]:
        raise GridMismatch(f"signal has {len(other)} samples, last cut at index {idx[-1]}")
    if not np.array_equal(other.positions[idx], seg.cut_positions):
        raise GridMismatch("signal positions differ from the segmented signal's")
    return [other.slice(a, b) for a, b in zip(idx[:-1], idx[1:])]


# ---------------------------------------------------------------- exports


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_cuts(seg: Segmentation, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cut_index", "position", "raw_value"])
        for k, (pos, val) in enumerate(zip(seg.cut_positions, seg.cut_values)):
            w.writerow([k, _fmt(pos), _fmt(val)])


def write_cycles(seg: Segmentation, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle_index", "start", "end"])
        for k, (a, b) in enumerate(zip(seg.cut_positions[:-1], seg.cut_positions[1:])):
            w.writerow([k, _fmt(a), _fmt(b)])


def write_overlay(raw: Signal, seg: Segmentation, path) -> None:
    is_cut = np.zeros(len(raw), dtype=int)
    is_cut[seg.cut_indices] = 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["position", "value", "is_cut"])
        for pos, val, c in zip(raw.positions, raw.values, is_cut):
            w.writerow([_fmt(pos), _fmt(val), int(c)])


def read_cuts(path) -> np.ndarray:
    """Cut positions from a file written by :func:`write_cuts`."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["position"]) for r in rows])
