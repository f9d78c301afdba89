"""``gaitcut`` command line: segment, tune, train, identify, evaluate."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetMissing, EmptyCandidates, GaitError, ParseError
from .evaluation import ExperimentConfig, parse_config_text, run_experiment, user_cycles
from .hapt import ACTIVITY_CODES, ENV_ROOT, HaptDataset
from .identification import (
    ArchetypeSet,
    classify_cycle,
    classify_cycle_multiaxis,
    cluster_archetypes,
    load_archetypes,
    save_archetypes,
)
from .segmentation import (
    SegmentationGrid,
    apply_cuts,
    grid_scores,
    segment,
    tune,
    write_cuts,
    write_cycles,
    write_overlay,
)
from .signal_core import Signal

STORE_SUFFIX = ".arch"


class _Stages:
    def __init__(self):
        self.name = "setup"

    def __call__(self, name):
        self.name = name
        return self


# ---------------------------------------------------------------- file input


def read_table(path) -> np.ndarray:
    """Numeric rows split on commas or whitespace; a non-numeric first row is a header."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if not rows and lineno == 1:
                    continue
                raise ParseError(f"{path}:{lineno}: not numeric", path, lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"{path}:{lineno}: ragged row", path, lineno)
    if not rows:
        raise ParseError(f"{path}: no samples", path)
    return np.array(rows)


def read_signals(path, channels: list[str]) -> dict[str, Signal]:
    """One file, one or more channels.

    1 column: values at positions 0..N-1. 2 columns: position, value.
    3 columns: x, y, z values at positions 1..N (the HAPT raw layout).
    """
    data = read_table(path)
    k = data.shape[1]
    if k == 1:
        return {channels[0]: Signal(np.arange(data.shape[0]), data[:, 0], channels[0])}
    if k == 2:
        return {channels[0]: Signal(data[:, 0], data[:, 1], channels[0])}
    if k == 3:
        pos = np.arange(1, data.shape[0] + 1)
        prefix = channels[0].split("_")[0] if "_" in channels[0] else "acc"
        return {f"{prefix}_{a}": Signal(pos, data[:, j], f"{prefix}_{a}") for j, a in enumerate("xyz")}
    raise ParseError(f"{path}: expected 1, 2 or 3 columns, got {k}", path)


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def parse_grid(text: str) -> dict:
    """``d_hy=40,50;beta_hy=-1;l_hy=5,10`` -> keyword tuples."""
    out = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in ("d_hy", "beta_hy", "l_hy"):
            raise ConfigError(f"bad --grid entry {part!r}")
        vals = _floats(value)
        out[key] = tuple(int(v) for v in vals) if key == "l_hy" else vals
    return out


def build_grid(args) -> SegmentationGrid:
    kw = parse_grid(args.grid) if args.grid else {}
    if args.d_hy is not None:
        kw["d_hy"] = _floats(args.d_hy)
    if args.beta_hy is not None:
        kw["beta_hy"] = _floats(args.beta_hy)
    if args.l_hy is not None:
        kw["l_hy"] = tuple(int(v) for v in _floats(args.l_hy))
    grid = SegmentationGrid(**kw)
    return grid.halved() if args.half else grid


def _fixed_params(grid: SegmentationGrid):
    pts = list(grid.points())
    return pts[0] if len(pts) == 1 else None


# ---------------------------------------------------------------- helpers


def _dataset_root(args):
    return args.dataset_root or os.environ.get(ENV_ROOT)


def _input_signals(args, stage) -> dict[str, Signal]:
    """Signals from ``--signal`` or a dataset period selected by person and index."""
    prefix = "acc" if args.sensor == "acc" else "gyr"
    channels = [f"{prefix}_x", f"{prefix}_y", f"{prefix}_z"]
    if args.signal:
        stage("read signal")
        sigs = read_signals(args.signal, [args.channel or channels[0]])
        if args.channels == "x":
            first = next(iter(sigs))
            sigs = {first: sigs[first]}
        return sigs
    if args.person is None:
        raise ConfigError("give --signal FILE or --person ID with a dataset root")
    stage("load dataset")
    ds = HaptDataset(_dataset_root(args))
    periods = ds.periods(args.person, ACTIVITY_CODES[args.activity])
    if not periods:
        raise ConfigError(f"person {args.person} has no {args.activity} periods")
    if not 0 <= args.period < len(periods):
        raise ConfigError(f"--period must lie in 0..{len(periods) - 1}")
    rec = ds.record(periods[args.period])
    names = sorted(set(channels[:1] if args.channels == "x" else channels) | {"acc_x"})
    return {ch: rec.channel(ch) for ch in names}


def _segment_signal(args, sigs, stage):
    grid = build_grid(args)
    base = sigs.get("acc_x", next(iter(sigs.values())))
    fixed = _fixed_params(grid)
    if fixed is not None:
        stage("segment")
        return fixed, segment(base, fixed), base
    stage("tune")
    params, seg = tune(base, grid, jobs=args.jobs)
    return params, seg, base


def _print_segmentation(params, seg):
    lengths = seg.lengths
    score = "nan" if seg.score is None else f"{seg.score:.4f}"
    print(f"d_hy={params.d_hy:.4f} beta_hy={params.beta_hy:.4f} l_hy={params.l_hy}")
    print(f"M={seg.n_cycles} mean_length={float(np.mean(lengths)):.4f} score={score}")


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands


def cmd_segment(args, stage) -> int:
    sigs = _input_signals(args, stage)
    params, seg, base = _segment_signal(args, sigs, stage)
    _print_segmentation(params, seg)
    out = _out_dir(args)
    if out is not None:
        stage("write outputs")
        write_cuts(seg, out / "cuts.csv")
        write_cycles(seg, out / "cycles.csv")
        write_overlay(base, seg, out / "overlay.csv")
    return 0


def cmd_tune(args, stage) -> int:
    sigs = _input_signals(args, stage)
    base = sigs.get("acc_x", next(iter(sigs.values())))
    grid = build_grid(args)
    stage("tune")
    results = grid_scores(base, grid, jobs=args.jobs)
    lines = ["d_hy\tbeta_hy\tl_hy\tscore\tcycles\terror"]
    for r in results:
        p = r.params
        if r.segmentation is not None:
            lines.append(f"{p.d_hy:.4f}\t{p.beta_hy:.4f}\t{p.l_hy}\t{r.score:.4f}\t{r.segmentation.n_cycles}\t")
        else:
            lines.append(f"{p.d_hy:.4f}\t{p.beta_hy:.4f}\t{p.l_hy}\tnan\t0\t{r.error}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    params, seg = tune(base, grid, jobs=args.jobs)
    print("best:")
    _print_segmentation(params, seg)
    out = _out_dir(args)
    if out is not None:
        stage("write outputs")
        (out / "grid_scores.tsv").write_text(text)
        write_cuts(seg, out / "cuts.csv")
    return 0


def cmd_train(args, stage) -> int:
    if args.person is None:
        raise ConfigError("train needs --person ID")
    if args.cycle:
        stage("read cycles")
        channel = args.channel or ("acc_x" if args.sensor == "acc" else "gyr_x")
        cycles_by_ch = {channel: [next(iter(read_signals(p, [channel]).values())) for p in args.cycle]}
    elif args.signal:
        sigs = _input_signals(args, stage)
        params, seg, _ = _segment_signal(args, sigs, stage)
        stage("apply cuts")
        cycles_by_ch = {ch: apply_cuts(s, seg) for ch, s in sigs.items()}
    else:
        stage("load dataset")
        ds = HaptDataset(_dataset_root(args))
        cfg = _experiment_config(args, {})
        stage("segment periods")
        cycles, skipped = user_cycles(ds, args.person, cfg)
        for s in skipped:
            print(f"skipped period {s['period']}: {s['reason']}", file=sys.stderr)
        cycles_by_ch = {ch: [c[ch] for c in cycles] for ch in cfg.channel_names}
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    stage("cluster")
    for ch, cycles in sorted(cycles_by_ch.items()):
        store = cluster_archetypes(cycles, args.rho, person_id=args.person, channel=ch)
        path = out / f"person{args.person}_{ch}{STORE_SUFFIX}"
        save_archetypes(store, path)
        print(f"{path}\tcycles={len(cycles)}\tarchetypes={len(store)}")
    return 0


def _load_stores(paths) -> list[ArchetypeSet]:
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob(f"*{STORE_SUFFIX}")))
        elif p.is_file():
            files.append(p)
        else:
            raise FileNotFoundError(f"no such store: {p}")
    stores = [load_archetypes(f) for f in files]
    if not stores or any(len(s) == 0 for s in stores):
        raise EmptyCandidates(f"no archetypes in {', '.join(str(p) for p in paths)}")
    return stores


def cmd_identify(args, stage) -> int:
    if not args.store:
        raise ConfigError("identify needs --store")
    if not args.cycle:
        raise ConfigError("identify needs --cycle")
    stage("load store")
    stores = _load_stores(args.store)
    by_channel: dict = {}
    for s in stores:
        by_channel.setdefault(s.channel, []).append(s)
    stage("read cycles")
    if args.axes == 3:
        if len(args.cycle) != 3:
            raise ConfigError("--axes 3 needs three --cycle files (x, y, z)")
        channels = sorted(by_channel)
        if len(channels) != 3:
            raise ConfigError(f"--axes 3 needs stores for three channels, found {channels}")
        cycles = {ch: next(iter(read_signals(p, [ch]).values())) for ch, p in zip(channels, args.cycle)}
        stage("classify")
        result = classify_cycle_multiaxis(cycles, by_channel)
    else:
        if len(args.cycle) != 1:
            raise ConfigError("--axes 1 takes one --cycle file")
        if len(by_channel) != 1:
            raise ConfigError(f"stores mix channels {sorted(map(str, by_channel))}; pass --axes 3")
        ((ch, cands),) = by_channel.items()
        cycle = next(iter(read_signals(args.cycle[0], [ch or "acc_x"]).values()))
        stage("classify")
        result = classify_cycle(cycle, cands)
    print(f"predicted\t{result.predicted}")
    for pid in sorted(result.per_candidate, key=str):
        print(f"{pid}\t{result.per_candidate[pid]:.4f}")
    return 0


_FLAG_KEYS = {
    "activity": "activity",
    "channels": "channels",
    "sensor": "sensor",
    "classes": "n_classes",
    "rho": "rho",
    "seed": "seed",
    "repetitions": "repetitions",
}


def _experiment_config(args, base: dict) -> ExperimentConfig:
    data = dict(base)
    for flag, key in _FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            data[key] = val
    if args.binary:
        data["binary"] = True
    if args.half:
        data["half"] = True
    if args.grid:
        data.update(parse_grid(args.grid))
    if args.d_hy is not None:
        data["d_hy"] = _floats(args.d_hy)
    if args.beta_hy is not None:
        data["beta_hy"] = _floats(args.beta_hy)
    if args.l_hy is not None:
        data["l_hy"] = tuple(int(v) for v in _floats(args.l_hy))
    return ExperimentConfig.from_mapping(data)


def cmd_evaluate(args, stage) -> int:
    stage("read config")
    base = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"no such config file: {path}")
        base = parse_config_text(path.read_text())
    cfg = _experiment_config(args, base)
    cfg.validate()
    stage("load dataset")
    ds = HaptDataset(_dataset_root(args))
    stage("run experiment")
    report = run_experiment(cfg, ds, jobs=args.jobs)
    for s in report.skipped:
        print(f"skipped user {s['user']} period {s['period']}: {s['reason']}", file=sys.stderr)
    print(report.summary_table(), end="")
    out = _out_dir(args)
    if out is not None:
        stage("write report")
        report.write(out)
    return 0


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser):
    p.add_argument("--dataset-root", help=f"HAPT directory or its RawData (default ${ENV_ROOT})")
    p.add_argument("--activity", choices=sorted(ACTIVITY_CODES), default=None)
    p.add_argument("--channels", choices=("x", "3axis"), default=None)
    p.add_argument("--sensor", choices=("acc", "gyro"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _segmentation_flags(p):
    p.add_argument("--d-hy", help="hypothesized cycle length(s), comma separated")
    p.add_argument("--beta-hy", help="correlation threshold(s)")
    p.add_argument("--l-hy", help="snap radius(es)")
    p.add_argument("--grid", help="d_hy=40,45;beta_hy=-1;l_hy=5,10")
    p.add_argument("--half", action="store_true", help="halve the d_hy grid")


def _input_flags(p):
    p.add_argument("--signal", help="signal file (1, 2 or 3 numeric columns)")
    p.add_argument("--channel", help="channel name for 1- or 2-column files")
    p.add_argument("--person", type=int, help="volunteer id")
    p.add_argument("--period", type=int, default=0, help="index of the person's period")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitcut", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="cut one signal into gait cycles")
    _common(p)
    _segmentation_flags(p)
    _input_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("tune", help="score every grid point for one signal")
    _common(p)
    _segmentation_flags(p)
    _input_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="cluster a person's cycles into archetype files")
    _common(p)
    _segmentation_flags(p)
    _input_flags(p)
    p.add_argument("--cycle", action="append", help="pre-cut cycle file (repeatable)")
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--classes", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--binary", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--repetitions", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", help="label one cycle against archetype stores")
    _common(p)
    p.add_argument("--store", action="append", help="archetype file or directory (repeatable)")
    p.add_argument("--cycle", action="append", help="cycle file; three with --axes 3")
    p.add_argument("--axes", type=int, choices=(1, 3), default=1)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="run a repeated identification experiment")
    _common(p)
    _segmentation_flags(p)
    p.add_argument("--config", help="key = value config file; flags win")
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--binary", action="store_true")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--repetitions", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)
    return parser


def _fill_defaults(args):
    # subcommands other than evaluate need concrete selectors
    if args.command != "evaluate":
        args.activity = args.activity or "walking"
        args.channels = args.channels or "x"
        args.sensor = args.sensor or "acc"
        if args.seed is None:
            args.seed = 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _fill_defaults(args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    stage = _Stages()
    try:
        return args.func(args, stage)
    except DatasetMissing as exc:
        print(f"gaitcut {args.command}: {stage.name}: {exc}", file=sys.stderr)
        return 1
    except (GaitError, OSError, ValueError) as exc:
        print(f"gaitcut {args.command}: {stage.name}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
