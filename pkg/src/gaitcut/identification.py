"""Per-person archetypes and single-cycle identification.

Archetypes come from a greedy threshold sweep: the first unassigned cycle
seeds a cluster, every later cycle within ``rho`` of the seed joins it, and
the cluster's archetype is updated by pairwise merged-grid averaging at each
join. A test cycle is labelled with the person owning the nearest archetype.

Cycles are compared on their own time axis: every cycle is shifted so its
first sample sits at position 0 before any distance is taken.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .distance import average_pair, signal_distance
from .errors import AxisMismatch, EmptyCandidates, EmptyInput, ParseError, UnknownUser
from .signal_core import Signal

DEFAULT_RHO = 0.1


def aligned(cycle: Signal) -> Signal:
    if len(cycle) and cycle.positions[0] != 0:
        return cycle.rebased(0)
    return cycle


@dataclass(eq=False)
class ArchetypeSet:
    person_id: object
    channel: str | None
    archetypes: list
    rho: float
    member_counts: list = field(default_factory=list)

    def __post_init__(self):
        self.archetypes = [aligned(a) for a in self.archetypes]

    def __len__(self):
        return len(self.archetypes)


@dataclass(frozen=True)
class ClassificationResult:
    predicted: object
    distance: float
    per_candidate: dict


def cluster_archetypes(
    cycles: Sequence[Signal],
    rho: float = DEFAULT_RHO,
    person_id=None,
    channel=None,
    on_absorb: Callable | None = None,
) -> ArchetypeSet:
    """Greedy seed-threshold clustering of ``cycles`` in input order.

    ``on_absorb(seed_index, cycle_index, distance)`` is called for every
    cycle that joins a cluster; indices refer to ``cycles``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if len(cycles) == 0:
        raise EmptyInput("no cycles to cluster")
    remaining = [(i, aligned(c)) for i, c in enumerate(cycles)]
    archetypes, counts = [], []
    while remaining:
        seed_idx, seed = remaining[0]
        archetype, members = seed, 1
        rest = []
        for idx, cyc in remaining[1:]:
            d = signal_distance(seed, cyc)
            if d <= rho:
                archetype = average_pair(cyc, archetype)
                members += 1
                if on_absorb is not None:
                    on_absorb(seed_idx, idx, d)
            else:
                rest.append((idx, cyc))
        archetypes.append(archetype)
        counts.append(members)
        remaining = rest
    if channel is None:
        channel = cycles[0].channel
    return ArchetypeSet(person_id, channel, archetypes, float(rho), counts)


def _nearest(cycle: Signal, store: ArchetypeSet) -> float:
    return min(signal_distance(cycle, a) for a in store.archetypes)


def _sort_key(pid):
    # ids of mixed types still order deterministically
    return (0, pid, "") if isinstance(pid, (int, np.integer)) else (1, 0, str(pid))


def _pick(per_candidate: dict) -> ClassificationResult:
    best = min(per_candidate, key=lambda pid: (per_candidate[pid], _sort_key(pid)))
    return ClassificationResult(best, per_candidate[best], dict(per_candidate))


def classify_cycle(cycle: Signal, candidates: Sequence[ArchetypeSet]) -> ClassificationResult:
    if not candidates:
        raise EmptyCandidates("no candidates to compare against")
    cycle = aligned(cycle)
    per = {}
    for store in candidates:
        if not len(store):
            raise EmptyCandidates(f"candidate {store.person_id!r} has no archetypes")
        d = _nearest(cycle, store)
        per[store.person_id] = min(d, per.get(store.person_id, np.inf))
    return _pick(per)


def classify_cycle_multiaxis(
    cycles_by_axis: Mapping[str, Signal],
    candidates_by_axis: Mapping[str, Sequence[ArchetypeSet]],
) -> ClassificationResult:
    """A person's score is their nearest archetype over all axes."""
    if not cycles_by_axis or set(cycles_by_axis) != set(candidates_by_axis):
        raise AxisMismatch(
            f"test axes {sorted(cycles_by_axis)} vs candidate axes {sorted(candidates_by_axis)}"
        )
    per = {}
    for axis in sorted(cycles_by_axis):
        res = classify_cycle(cycles_by_axis[axis], candidates_by_axis[axis])
        for pid, d in res.per_candidate.items():
            per[pid] = min(d, per.get(pid, np.inf))
    return _pick(per)


def binary_authenticate(cycle, user_id, candidates) -> bool:
    """Accept iff the nearest enrolled person is ``user_id``.

    ``cycle`` is either one Signal (with ``candidates`` a list of
    ArchetypeSet) or an axis -> Signal mapping (with ``candidates`` an
    axis -> list mapping).
    """
    if isinstance(cycle, Mapping):
        ids = {s.person_id for stores in candidates.values() for s in stores}
        if user_id not in ids:
            raise UnknownUser(f"user {user_id!r} is not enrolled")
        return classify_cycle_multiaxis(cycle, candidates).predicted == user_id
    if user_id not in {s.person_id for s in candidates}:
        raise UnknownUser(f"user {user_id!r} is not enrolled")
    return classify_cycle(cycle, candidates).predicted == user_id


# ---------------------------------------------------------------- persistence

_MAGIC = "# gaitcut archetype set v1"


def save_archetypes(store: ArchetypeSet, path) -> None:
    """Text serialization; floats are written with ``repr`` so reloads are exact."""
    lines = [
        _MAGIC,
        f"person_id {store.person_id!r}",
        f"channel {store.channel or '-'}",
        f"rho {store.rho!r}",
        f"count {len(store.archetypes)}",
    ]
    for k, (arch, members) in enumerate(zip(store.archetypes, store.member_counts)):
        lines.append(f"archetype {k} members {members} samples {len(arch)}")
        for p, v in zip(arch.positions, arch.values):
            lines.append(f"{float(p)!r} {float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_id(text: str):
    text = text.strip()
    if text.startswith(("'", '"')) and text.endswith(text[0]) and len(text) >= 2:
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        return text


def load_archetypes(path) -> ArchetypeSet:
    path = Path(path)
    lines = path.read_text().splitlines()

    def fail(msg, lineno):
        raise ParseError(f"{path}:{lineno}: {msg}", path, lineno)

    if not lines or lines[0].strip() != _MAGIC:
        fail("not an archetype file", 1)
    header = {}
    for lineno in range(2, 6):
        if lineno > len(lines):
            fail("truncated header", lineno)
        key, _, value = lines[lineno - 1].partition(" ")
        header[key] = value
    try:
        person = _parse_id(header["person_id"])
        channel = None if header["channel"] == "-" else header["channel"]
        rho = float(header["rho"])
        count = int(header["count"])
    except (KeyError, ValueError) as exc:
        fail(f"bad header ({exc})", 2)
    archetypes, members = [], []
    i = 5
    for _ in range(count):
        if i >= len(lines):
            fail("missing archetype block", i + 1)
        parts = lines[i].split()
        if len(parts) != 6 or parts[0] != "archetype":
            fail("expected an archetype block header", i + 1)
        n = int(parts[5])
        rows = lines[i + 1 : i + 1 + n]
        if len(rows) != n:
            fail("archetype block is truncated", i + 1)
        try:
            data = np.array([[float(x) for x in r.split()] for r in rows]).reshape(n, 2)
        except ValueError:
            fail("malformed sample row", i + 2)
        archetypes.append(Signal(data[:, 0], data[:, 1], channel))
        members.append(int(parts[3]))
        i += 1 + n
    return ArchetypeSet(person, channel, archetypes, rho, members)
