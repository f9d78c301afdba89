import math

import numpy as np
import pytest

import oracles
from conftest import sig
from gaitcut.errors import AllCandidatesFailed, ConstantSignal, GridMismatch, NoPeaks, TooFewCuts, TooFewCycles, ZeroVariance
from gaitcut.segmentation import (
    FinerCuts,
    HyperParams,
    Segmentation,
    SegmentationGrid,
    apply_cuts,
    correlation,
    cycle_length_histogram,
    extend_left,
    extend_right,
    find_best_cycle,
    finer_cuts,
    grid_scores,
    iterative_segment,
    precut,
    read_cuts,
    segment,
    segmentation_score,
    tune,
    write_cuts,
    write_cycles,
    write_overlay,
)
from gaitcut.signal_core import PeakSet, Signal
from gaitcut.synthetic import gait_like

PI = math.pi


def valley_sine(period, n_periods, extra=1):
    """-cos wave with valleys at 0, period, 2*period, ..."""
    t = np.arange(period * n_periods + extra)
    return sig(-np.cos(2 * np.pi * t / period))


def peakset(indices, angles, raw=None):
    idx = np.asarray(indices)
    vals = np.zeros(idx.size) if raw is None else raw.values[idx]
    return PeakSet(idx, idx.astype(float), vals, np.asarray(angles, dtype=float))


def oracle_score(values, cuts, radius):
    values = list(values)
    last = len(values) - 1
    total = 0.0
    for i in range(len(cuts) - 2):
        ref = list(enumerate(values[cuts[i + 1] : cuts[i + 2] + 1]))
        h = (cuts[i + 2] - cuts[i]) / 2
        shifts = [n for n in range(math.ceil(h - radius), math.floor(h + radius) + 1)] or [math.floor(h + 0.5)]
        best = math.inf
        for n in shifts:
            a, b = max(0, cuts[i] + n), min(last, cuts[i + 1] + n)
            if b < a:
                continue
            best = min(best, oracles.distance(list(enumerate(values[a : b + 1])), ref))
        total += best if best < math.inf else 0.0
    return total


class TestHyperParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            HyperParams(2)
        with pytest.raises(ValueError):
            HyperParams(50, beta_hy=1.5)
        with pytest.raises(ValueError):
            HyperParams(50, l_hy=-1)

    def test_grid(self):
        g = SegmentationGrid(d_hy=(40, 50), l_hy=(5,))
        assert [p.d_hy for p in g.points()] == [40, 50]
        assert g.halved().d_hy == (20, 25)


class TestCuts:
    def test_precut_on_sine(self):
        raw = sig(np.sin(2 * np.pi * np.arange(200) / 50))
        assert len(precut(raw)) == 4

    def test_precut_ramp(self):
        with pytest.raises(NoPeaks):
            precut(sig(np.arange(100.0)))

    def test_precut_angles_in_range(self):
        raw, _ = gait_like(40, 8, noise=0.05, seed=0)
        p = precut(raw)
        assert p.angles.size == len(p)
        assert np.all((p.angles > 0) & (p.angles <= PI))

    def test_quantile_keeps_the_flat_ones(self):
        peaks = peakset([10, 30, 50, 70], [PI / 2, PI, PI, PI / 4])
        assert list(finer_cuts(peaks, 0.5).indices) == [30, 50]

    def test_quantile_zero_keeps_all(self):
        peaks = peakset([10, 30, 50, 70], [PI / 2, PI, PI, PI / 4])
        assert len(finer_cuts(peaks, 0.0)) == 4

    def test_equal_angles_pass_on_ties(self):
        peaks = peakset([10, 30, 50], [1.0, 1.0, 1.0])
        assert len(finer_cuts(peaks, 0.5)) == 3

    def test_too_few(self):
        with pytest.raises(TooFewCuts):
            finer_cuts(peakset([10, 30, 50], [0.1, 0.2, 3.0]), 0.9)


class TestHistogram:
    def cuts(self, idx):
        raw = sig(np.zeros(max(idx) + 1))
        return FinerCuts.from_indices(raw, idx)

    def test_equal_lengths(self):
        h = cycle_length_histogram(self.cuts([0, 50, 100, 150]))
        assert list(h.lengths) == [50, 50, 50]
        assert sorted(h.counts[h.counts > 0]) == [3]

    def test_two_lengths(self):
        h = cycle_length_histogram(self.cuts([0, 20, 120]))
        assert list(h.counts) == [1, 1]

    def test_single(self):
        h = cycle_length_histogram(self.cuts([0, 20]))
        assert list(h.counts) == [1]

    def test_bin_count(self):
        h = cycle_length_histogram(self.cuts(list(range(0, 1100, 100))))
        assert h.counts.size == math.ceil(math.sqrt(10))


class TestBestCycle:
    def test_all_in_band(self):
        raw = valley_sine(50, 3)
        best = find_best_cycle(FinerCuts.from_indices(raw, [0, 50, 100, 150]), raw, 50)
        assert (best.start, best.length) == (0, 50)
        # the representative length is a bin centre, within one bin of 50
        assert best.d_be == pytest.approx(50, abs=0.5)
        assert not best.capped

    def test_short_cycles_are_merged(self):
        raw = sig(np.zeros(81))
        best = find_best_cycle(FinerCuts.from_indices(raw, [0, 20, 40, 60, 80]), raw, 50)
        assert best.d_be == pytest.approx(40, abs=0.5)
        assert best.length == 40

    def test_cap(self):
        # one 300-sample cycle; nothing to relax without pre-cut angles
        raw = sig(np.zeros(301))
        best = find_best_cycle(FinerCuts.from_indices(raw, [0, 300]), raw, 50)
        assert best.d_be == 50 and best.capped

    def test_long_cycles_relax_the_quantile(self):
        raw = sig(np.zeros(400))
        idx = np.arange(20, 400, 40)
        angles = np.where(np.arange(idx.size) % 2 == 0, 3.0, 1.0)
        peaks = peakset(idx, angles, raw)
        cuts = finer_cuts(peaks)
        assert set(np.diff(cuts.indices)) == {80}
        best = find_best_cycle(cuts, raw, 40)
        assert best.d_be == pytest.approx(40) and not best.capped

    def test_contract_on_random_cut_sets(self, rng):
        for _ in range(200):
            n = 3000
            raw = sig(rng.normal(size=n))
            idx = np.unique(np.cumsum(rng.integers(5, 150, size=30)))
            idx = idx[idx < n]
            if idx.size < 2:
                continue
            peaks = peakset(idx, rng.uniform(0.1, PI, idx.size), raw)
            try:
                cuts = finer_cuts(peaks)
            except TooFewCuts:
                continue
            d_hy = float(rng.uniform(20, 90))
            best = find_best_cycle(cuts, raw, d_hy)
            assert 0.8 * d_hy <= best.d_be <= 1.2 * d_hy or best.d_be == d_hy


class TestCorrelation:
    def test_self(self):
        s = valley_sine(50, 1)
        assert correlation(s, s) == pytest.approx(1.0)

    def test_anti(self):
        s = valley_sine(50, 1)
        assert correlation(s, sig(3.0 - s.values)) == pytest.approx(-1.0)

    def test_quarter_shift(self):
        t = np.arange(51)
        a = sig(np.sin(2 * np.pi * t / 50))
        b = sig(np.sin(2 * np.pi * (t + 12.5) / 50))
        assert abs(correlation(a, b)) < 0.1

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            correlation(sig(np.ones(10)), valley_sine(50, 1))


class TestExtension:
    params = HyperParams(50, -1.0, 10)

    def test_periodic_left(self):
        raw = valley_sine(50, 8)
        cuts = FinerCuts.from_indices(raw, np.arange(0, 401, 50))
        best = find_best_cycle(cuts, raw, 50)
        best = type(best)(300, 350, 50.0, cuts, 6, raw.slice(300, 350))
        left = extend_left(best, None, raw, self.params)
        assert list(left.cut_indices) == list(range(0, 351, 50))

    def test_gap_gets_one_snapped_cut(self):
        raw = valley_sine(50, 7)
        cuts = FinerCuts.from_indices(raw, [0, 100, 150, 200, 250, 300, 350])
        best = find_best_cycle(cuts, raw, 50)
        assert best.start == 100
        left = extend_left(best, None, raw, self.params)
        # the only valley within +-l_hy of 100 - 50
        assert list(left.cut_indices) == [0, 50, 100, 150]

    def test_gap_mirrored(self):
        raw = valley_sine(50, 7)
        last = len(raw) - 1
        mirrored = sorted(last - np.array([0, 100, 150, 200, 250, 300, 350]))
        cuts = FinerCuts.from_indices(raw, mirrored)
        best = find_best_cycle(cuts, raw, 50)
        best = type(best)(last - 150, last - 100, 50.0, cuts, 4, raw.slice(last - 150, last - 100))
        right = extend_right(best, None, raw, self.params)
        assert list(right.cut_indices) == [last - 150, last - 100, last - 50, last]

    def test_noise_neighbour_is_rejected(self, rng):
        noise = rng.normal(0, 1, 52)
        body = -np.cos(2 * np.pi * np.arange(301) / 50)
        raw = sig(np.concatenate((noise, body)))
        idx = [4] + list(range(52, 353, 50))
        cuts = FinerCuts.from_indices(raw, idx)
        best = find_best_cycle(cuts, raw, 50)
        best = type(best)(52, 102, 50.0, cuts, 1, raw.slice(52, 102))
        strict = extend_left(best, None, raw, HyperParams(50, 0.9, 10))
        assert strict.cut_indices[0] == 52
        loose = extend_left(best, None, raw, HyperParams(50, -1.0, 10))
        assert loose.cut_indices[0] < 52

    def test_right_is_mirror_of_left(self):
        raw = valley_sine(50, 8)
        cuts = FinerCuts.from_indices(raw, np.arange(0, 401, 50))
        best = find_best_cycle(cuts, raw, 50)
        right = extend_right(best, None, raw, self.params)
        assert list(right.cut_indices) == list(range(0, 401, 50))
        rev = raw.reversed()
        best_r = find_best_cycle(FinerCuts.from_indices(rev, np.arange(0, 401, 50)), rev, 50)
        best_r = type(best_r)(350, 400, 50.0, best_r.cuts, 7, rev.slice(350, 400))
        left = extend_left(best_r, None, rev, self.params)
        assert list(400 - left.cut_indices[::-1]) == list(right.cut_indices)

    def test_best_cycle_at_the_end(self):
        raw = valley_sine(50, 4)
        cuts = FinerCuts.from_indices(raw, [0, 50, 100, 150, 200])
        best = find_best_cycle(cuts, raw, 50)
        best = type(best)(150, 200, 50.0, cuts, 3, raw.slice(150, 200))
        right = extend_right(best, None, raw, self.params)
        assert list(right.cut_indices) == [150, 200]


class TestSegment:
    def test_sine(self):
        seg = segment(valley_sine(50, 10), HyperParams(50, -1, 10))
        assert seg.n_cycles == 10
        assert np.all(np.abs(seg.lengths - 50) <= 1)

    def test_half_cycles(self):
        # valleys every 25 samples, alternating peak heights: a 50-sample stride
        raw, _ = gait_like(25, 20, offset=0, tail=0)
        k = (np.arange(len(raw)) // 25) % 2
        raw = Signal(raw.positions, raw.values * np.where(k == 0, 1.0, 0.6))
        half = segment(raw, HyperParams(25, -1, 5))
        assert half.n_cycles == 20
        full = segment(raw, HyperParams(50, -1, 5))
        assert set(full.lengths) == {50}

    def test_constant(self):
        with pytest.raises(ConstantSignal):
            segment(sig(np.ones(200)), HyperParams(50))

    def test_noisy_gait(self):
        raw, truth = gait_like(45, 12, noise=0.05, seed=4)
        seg = segment(raw, HyperParams(45, -1, 10))
        assert seg.n_cycles == 12
        assert np.max(np.abs(seg.cut_indices - truth)) <= 3

    def test_cycles_share_endpoints(self):
        raw, _ = gait_like(40, 6, seed=1)
        seg = segment(raw, HyperParams(40))
        for a, b in zip(seg.cycles[:-1], seg.cycles[1:]):
            assert a.positions[-1] == b.positions[0]


class TestScore:
    def test_true_cuts_score_zero(self):
        raw = valley_sine(50, 6)
        seg = Segmentation.from_indices(raw, np.arange(0, 301, 50))
        assert segmentation_score(raw, seg) < 1e-6

    def test_displaced_cut_scores_higher(self):
        raw = valley_sine(50, 6)
        good = Segmentation.from_indices(raw, np.arange(0, 301, 50))
        bad = Segmentation.from_indices(raw, [0, 50, 110, 150, 200, 250, 300])
        assert segmentation_score(raw, bad) > segmentation_score(raw, good)

    def test_matches_oracle(self, rng):
        raw, _ = gait_like(37, 6, noise=0.1, seed=2)
        for _ in range(5):
            idx = np.sort(rng.choice(np.arange(5, len(raw) - 5), size=5, replace=False))
            seg = Segmentation.from_indices(raw, idx)
            for radius in (0, 3):
                assert segmentation_score(raw, seg, radius) == pytest.approx(
                    oracle_score(raw.values, list(idx), radius), rel=1e-9
                )

    def test_one_cycle(self):
        raw = valley_sine(50, 2)
        with pytest.raises(TooFewCycles):
            segmentation_score(raw, Segmentation.from_indices(raw, [0, 50]))


class TestTune:
    def test_one_point(self):
        raw, _ = gait_like(50, 8, seed=0)
        params, seg = tune(raw, SegmentationGrid(d_hy=(50,), l_hy=(10,)))
        assert params == HyperParams(50, -1.0, 10)
        assert seg.n_cycles == 8

    def test_argmin_of_brute_force(self):
        raw = valley_sine(50, 10)
        grid = SegmentationGrid(d_hy=(25, 50), l_hy=(10,))
        scored = []
        for p in grid.points():
            seg = segment(raw, p)
            scored.append((oracle_score(raw.values, list(seg.cut_indices), 5), p.d_hy, seg))
        want = min(scored, key=lambda x: x[:2])[2]
        _, got = tune(raw, grid)
        assert np.mean(got.lengths) == np.mean(want.lengths)

    def test_all_fail(self):
        with pytest.raises(AllCandidatesFailed) as info:
            tune(sig(np.ones(300)))
        assert len(info.value.failures) == 15

    def test_parallel_matches_serial(self):
        raw, _ = gait_like(43, 10, noise=0.05, seed=9)
        serial = grid_scores(raw, SegmentationGrid())
        threaded = grid_scores(raw, SegmentationGrid(), jobs=4)
        assert [r.score for r in serial] == [r.score for r in threaded]


class TestIterative:
    def test_two_regions(self):
        a = -np.cos(2 * np.pi * np.arange(400) / 40)
        b = -np.cos(2 * np.pi * np.arange(491) / 70)
        raw = sig(np.concatenate((a, b)))
        segs = iterative_segment(raw, HyperParams(40, 0.9, 10))
        assert len(segs) == 2
        assert segs[0].cut_indices[0] == 0 and abs(segs[0].cut_indices[-1] - 400) <= 3
        assert abs(segs[1].cut_indices[0] - 400) <= 3 and abs(segs[1].cut_indices[-1] - 890) <= 3
        assert np.mean(segs[0].lengths) == pytest.approx(40, abs=1)
        assert np.mean(segs[1].lengths) == pytest.approx(70, abs=1)

    def test_noise(self, rng):
        assert iterative_segment(sig(rng.normal(size=600)), HyperParams(50, 0.7, 10)) == []

    def test_homogeneous(self):
        raw, _ = gait_like(50, 12, noise=0.05, seed=1)
        segs = iterative_segment(raw, HyperParams(50, 0.7, 10))
        assert len(segs) == 1
        assert segs[0].span >= 0.9 * (len(raw) - 1)

    def test_needs_positive_beta(self):
        with pytest.raises(ValueError):
            iterative_segment(valley_sine(50, 4), HyperParams(50, -1.0))


class TestApplyCuts:
    def test_self(self):
        raw, _ = gait_like(40, 5, seed=0)
        seg = segment(raw, HyperParams(40))
        for a, b in zip(apply_cuts(raw, seg), seg.cycles):
            np.testing.assert_array_equal(a.values, b.values)

    def test_other_channel(self):
        raw, _ = gait_like(40, 5, seed=0)
        gyr = Signal(raw.positions, np.sin(raw.values), "gyr_x")
        seg = segment(raw, HyperParams(40))
        cycles = apply_cuts(gyr, seg)
        assert [c.positions[0] for c in cycles] == list(seg.cut_positions[:-1])
        assert cycles[0].channel == "gyr_x"

    def test_shorter(self):
        raw, _ = gait_like(40, 5, seed=0)
        seg = segment(raw, HyperParams(40))
        with pytest.raises(GridMismatch):
            apply_cuts(raw.slice(0, int(seg.cut_indices[-1]) - 1), seg)


def test_exports_round_trip(tmp_path):
    raw, _ = gait_like(40, 5, seed=0)
    seg = segment(raw, HyperParams(40))
    write_cuts(seg, tmp_path / "cuts.csv")
    write_cycles(seg, tmp_path / "cycles.csv")
    write_overlay(raw, seg, tmp_path / "overlay.csv")
    np.testing.assert_array_equal(read_cuts(tmp_path / "cuts.csv"), seg.cut_indices)
    lines = (tmp_path / "cycles.csv").read_text().splitlines()
    assert len(lines) == seg.n_cycles + 1
    overlay = (tmp_path / "overlay.csv").read_text().splitlines()
    assert sum(line.endswith(",1") for line in overlay[1:]) == seg.cut_indices.size
