"""Repeated user-adversary identification experiments on HAPT-layout data."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyMatrix, GaitError, TooFewCycles
from .hapt import ACTIVITY_CODES, HaptDataset
from .identification import (
    DEFAULT_RHO,
    aligned,
    classify_cycle,
    classify_cycle_multiaxis,
    cluster_archetypes,
)
from .segmentation import HyperParams, SegmentationGrid, apply_cuts, iterative_segment, tune
from .signal_core import Signal

log = logging.getLogger(__name__)

METRICS = ("ACC", "PPV", "TPR", "F1")


@dataclass
class ExperimentConfig:
    activity: str = "walking"  # walking | up | down | mixed
    channels: str = "x"  # x | 3axis
    sensor: str = "acc"  # acc | gyro
    n_classes: int = 6
    binary: bool = False
    repetitions: int = 20
    train_fraction: float = 0.8
    rho: float = DEFAULT_RHO
    d_hy: tuple = (40, 45, 50, 55, 60)
    beta_hy: tuple = (-1.0,)
    l_hy: tuple = (5, 10, 15)
    shift_radius: int = 5
    half: bool = False
    # used by the iterative segmentation of mixed walking
    mixed_d_hy: float = 50
    mixed_beta_hy: float = 0.7
    mixed_l_hy: int = 10
    adversary_cycles: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("d_hy", "beta_hy", "l_hy"):
            val = getattr(self, name)
            setattr(self, name, tuple(val) if isinstance(val, (list, tuple)) else (val,))

    def validate(self, n_available: int | None = None) -> None:
        if self.activity not in ACTIVITY_CODES:
            raise ConfigError(f"activity must be one of {sorted(ACTIVITY_CODES)}")
        if self.channels not in ("x", "3axis"):
            raise ConfigError("channels must be 'x' or '3axis'")
        if self.sensor not in ("acc", "gyro"):
            raise ConfigError("sensor must be 'acc' or 'gyro'")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if self.n_classes < 1:
            raise ConfigError("n_classes must be at least 1")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        if n_available is not None and self.n_classes > n_available:
            raise ConfigError(
                f"n_classes={self.n_classes} but only {n_available} volunteers have usable cycles"
            )
        self.grid()

    @property
    def channel_names(self) -> list[str]:
        prefix = "acc" if self.sensor == "acc" else "gyr"
        axes = "x" if self.channels == "x" else "xyz"
        return [f"{prefix}_{a}" for a in axes]

    def grid(self) -> SegmentationGrid:
        grid = SegmentationGrid(self.d_hy, self.beta_hy, self.l_hy, self.shift_radius)
        return grid.halved() if self.half else grid

    def mixed_params(self) -> HyperParams:
        return HyperParams(self.mixed_d_hy, self.mixed_beta_hy, self.mixed_l_hy, self.shift_radius)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = cls.__dataclass_fields__
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` comments; comma-separated values become tuples."""
    fields = ExperimentConfig.__dataclass_fields__
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or key not in fields:
            raise ConfigError(f"line {lineno}: cannot use {line!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value: str):
    if key in ("d_hy", "beta_hy", "l_hy"):
        conv = int if key == "l_hy" else float
        return tuple(conv(v) for v in value.split(",") if v.strip())
    if key in ("binary", "half"):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if key in ("n_classes", "repetitions", "shift_radius", "mixed_l_hy", "adversary_cycles", "seed"):
        return int(value)
    if key in ("train_fraction", "rho", "mixed_d_hy", "mixed_beta_hy"):
        return float(value)
    return value


# ---------------------------------------------------------------- splits & metrics


def split_cycles(cycles, fraction: float, seed) -> tuple[list, list]:
    n = len(cycles)
    if n < 2:
        raise TooFewCycles(f"cannot split {n} cycle(s)")
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(fraction * n - 1e-9)
    n_train = min(max(n_train, 1), n - 1)
    return [cycles[i] for i in order[:n_train]], [cycles[i] for i in order[n_train:]]


def compute_metrics(confusion) -> dict:
    """Accuracy plus macro-averaged precision, recall and F1.

    Rows are true classes, columns predictions. Classes with an empty row or
    column contribute 0 to the corresponding average.
    """
    cm = np.asarray(confusion, dtype=float)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError("confusion matrix must be square")
    total = cm.sum()
    if total <= 0:
        raise EmptyMatrix("confusion matrix is empty")
    tp = np.diag(cm)
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    prec = np.divide(tp, col, out=np.zeros_like(tp), where=col > 0)
    rec = np.divide(tp, row, out=np.zeros_like(tp), where=row > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros_like(tp), where=denom > 0)
    return {
        "ACC": float(tp.sum() / total),
        "PPV": float(prec.mean()),
        "TPR": float(rec.mean()),
        "F1": float(f1.mean()),
    }


def mean_and_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


# ---------------------------------------------------------------- report


@dataclass
class RepetitionResult:
    index: int
    volunteers: list
    labels: list
    confusion: np.ndarray
    metrics: dict

    def to_dict(self):
        return {
            "index": self.index,
            "volunteers": [int(v) for v in self.volunteers],
            "labels": [str(l) for l in self.labels],
            "confusion": self.confusion.astype(int).tolist(),
            "metrics": self.metrics,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    repetitions: list
    mean: dict
    stderr: dict
    skipped: list = field(default_factory=list)

    def to_dict(self):
        return {
            "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.config).items()},
            "repetitions": [r.to_dict() for r in self.repetitions],
            "aggregate": {"mean": self.mean, "stderr": self.stderr},
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_row(self) -> tuple[str, str]:
        """Means, then parenthesized standard errors, 4 decimals each."""
        label = "binary" if self.config.binary else str(self.config.n_classes)
        means = "\t".join(f"{self.mean[m]:.4f}" for m in METRICS)
        errs = "\t".join(f"({self.stderr[m]:.4f})" for m in METRICS)
        return f"{label}\t{means}", f"\t{errs}"

    def summary_table(self) -> str:
        top, bottom = self.summary_row()
        return "classes\t" + "\t".join(METRICS) + "\n" + top + "\n" + bottom + "\n"

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json", out / "summary.tsv"]
        written[0].write_text(self.to_json())
        written[1].write_text(self.summary_table())
        for rep in self.repetitions:
            path = out / f"confusion_rep{rep.index:02d}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["true\\predicted", *rep.labels])
                for label, row in zip(rep.labels, rep.confusion.astype(int)):
                    w.writerow([label, *row.tolist()])
            written.append(path)
        return written


# ---------------------------------------------------------------- cycle bank


def _concat(signals, channel):
    values = np.concatenate([s.values for s in signals])
    return Signal(np.arange(1, values.size + 1), values, channel)


def user_cycles(dataset: HaptDataset, user: int, config: ExperimentConfig):
    """All cycles of one volunteer as ``{channel: Signal}`` dicts, plus skip notes.

    Every period is segmented on the x-axis accelerometer and the cuts are
    applied to the configured channels.
    """
    codes = ACTIVITY_CODES[config.activity]
    channels = config.channel_names
    periods = dataset.periods(user, codes)
    cycles, skipped = [], []

    def collect(seg, source):
        per_channel = {ch: apply_cuts(source[ch], seg) for ch in channels}
        for k in range(seg.n_cycles):
            cycles.append({ch: aligned(per_channel[ch][k]) for ch in channels})

    if config.activity == "mixed":
        records = [dataset.record(p) for p in periods]
        if not records:
            return cycles, skipped
        names = sorted(set(channels) | {"acc_x"})
        source = {ch: _concat([r.channel(ch) for r in records], ch) for ch in names}
        for seg in iterative_segment(source["acc_x"], config.mixed_params()):
            collect(seg, source)
        if not cycles:
            skipped.append({"user": user, "period": "mixed", "reason": "no segmentation"})
        return cycles, skipped

    grid = config.grid()
    for p in periods:
        rec = dataset.record(p)
        try:
            _, seg = tune(rec.channel("acc_x"), grid)
        except GaitError as exc:
            skipped.append(
                {"user": user, "period": [p.experiment_id, p.start_sample, p.end_sample], "reason": str(exc)}
            )
            log.info("user %s: skipping period %s-%s: %s", user, p.start_sample, p.end_sample, exc)
            continue
        collect(seg, {ch: rec.channel(ch) for ch in channels})
    return cycles, skipped


def _bank_worker(args):
    root, user, config = args
    return user_cycles(HaptDataset(root), user, config)


def build_cycle_bank(dataset: HaptDataset, users, config: ExperimentConfig, jobs: int = 1):
    users = list(users)
    if jobs and jobs > 1 and len(users) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_bank_worker, [(dataset.raw_dir, u, config) for u in users]))
    else:
        results = [user_cycles(dataset, u, config) for u in users]
    bank, skipped = {}, []
    for u, (cycles, skips) in zip(users, results):
        bank[u] = cycles
        skipped.extend(skips)
    return bank, skipped


# ---------------------------------------------------------------- experiment


def _predict(test_cycle: dict, stores: dict, channels: list):
    if len(channels) == 1:
        ch = channels[0]
        return classify_cycle(test_cycle[ch], [stores[u][ch] for u in stores]).predicted
    return classify_cycle_multiaxis(
        {ch: test_cycle[ch] for ch in channels},
        {ch: [stores[u][ch] for u in stores] for ch in channels},
    ).predicted


def run_repetition(bank: dict, volunteers, config: ExperimentConfig, rep: int) -> RepetitionResult:
    channels = config.channel_names
    volunteers = sorted(int(v) for v in volunteers)
    stores, tests = {}, {}
    for u in volunteers:
        train, test = split_cycles(bank[u], config.train_fraction, [config.seed, rep, u])
        stores[u] = {
            ch: cluster_archetypes([c[ch] for c in train], config.rho, person_id=u, channel=ch)
            for ch in channels
        }
        tests[u] = test
    predictions = {u: [_predict(c, stores, channels) for c in tests[u]] for u in volunteers}

    if not config.binary:
        pos = {u: k for k, u in enumerate(volunteers)}
        cm = np.zeros((len(volunteers), len(volunteers)), dtype=int)
        for u in volunteers:
            for p in predictions[u]:
                cm[pos[u], pos[p]] += 1
        labels = [str(u) for u in volunteers]
    else:
        # rows/cols: adversary, user
        cm = np.zeros((2, 2), dtype=int)
        rng = np.random.default_rng([config.seed, rep, 1_000_003])
        for u in volunteers:
            for p in predictions[u]:
                cm[1, 1 if p == u else 0] += 1
            for v in volunteers:
                if v == u:
                    continue
                k = min(config.adversary_cycles, len(predictions[v]))
                for j in rng.choice(len(predictions[v]), size=k, replace=False):
                    cm[0, 1 if predictions[v][j] == u else 0] += 1
        labels = ["adversary", "user"]
    return RepetitionResult(rep, volunteers, labels, cm, compute_metrics(cm))


def run_experiment(config: ExperimentConfig, dataset, jobs: int = 1) -> ExperimentReport:
    """Run ``config.repetitions`` random volunteer draws and aggregate the metrics.

    ``dataset`` is a :class:`HaptDataset` or a path accepted by it.
    """
    config.validate()
    if not isinstance(dataset, HaptDataset):
        dataset = HaptDataset(dataset)
    candidates = dataset.users_with(ACTIVITY_CODES[config.activity])
    bank, skipped = build_cycle_bank(dataset, candidates, config, jobs)
    usable = [u for u in candidates if len(bank[u]) >= 2]
    for u in candidates:
        if u not in usable:
            skipped.append({"user": u, "period": None, "reason": f"{len(bank[u])} cycle(s) in total"})
    config.validate(len(usable))

    reps = []
    for r in range(config.repetitions):
        rng = np.random.default_rng([config.seed, r])
        volunteers = rng.choice(usable, size=config.n_classes, replace=False)
        reps.append(run_repetition(bank, volunteers, config, r))
    reps.sort(key=lambda x: x.index)
    mean, stderr = {}, {}
    for m in METRICS:
        mean[m], stderr[m] = mean_and_stderr([x.metrics[m] for x in reps])
    return ExperimentReport(config, reps, mean, stderr, skipped)
