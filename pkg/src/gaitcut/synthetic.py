"""Synthetic walking-like signals with known cycle boundaries.

Used by the test-suite and the demo scripts; also writes small datasets in
the HAPT raw-data layout so the evaluation harness can run without the real
download.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signal_core import Signal


def gait_like(
    period: int,
    n_cycles: int,
    noise: float = 0.0,
    offset: int | None = None,
    tail: int | None = None,
    amplitude: float = 8.0,
    spike: float = 8.0,
    spike_width: int = 3,
    seed=None,
    channel: str | None = "acc_x",
):
    """Periodic signal with one sharp valley per cycle.

    Each cycle is a triangle wave (valley at the cycle boundary) with a
    narrow spike on top, which keeps the valleys inside the detector's depth
    band. Returns ``(signal, true_cut_indices)``; the signal starts ``offset``
    samples before the first true cut and ends ``tail`` samples after the last.
    """
    rng = np.random.default_rng(seed)
    if offset is None:
        offset = period // 2
    if tail is None:
        tail = period // 2
    n = offset + n_cycles * period + tail + 1
    t = np.arange(n)
    u = ((t - offset) / period) % 1.0
    tri = 1.0 - np.abs(2.0 * u - 1.0)
    dist_to_top = np.abs(u - 0.5) * period
    bump = np.clip(1.0 - dist_to_top / spike_width, 0.0, None)
    values = amplitude * tri + spike * bump
    if noise:
        values = values + rng.normal(0.0, noise, n)
    cuts = offset + period * np.arange(n_cycles + 1)
    return Signal(t, values, channel), cuts


def harmonic_cycle(n_samples: int, coeffs, phases) -> np.ndarray:
    """One cycle built from a handful of harmonics, starting and ending at a valley."""
    u = np.arange(n_samples) / n_samples
    y = -np.cos(2 * np.pi * u)
    for k, (c, ph) in enumerate(zip(coeffs, phases), start=2):
        y = y + c * np.sin(2 * np.pi * k * u) * np.sin(np.pi * u) ** 2 * np.cos(ph)
    return y


@dataclass(frozen=True)
class PersonModel:
    """Per-person gait signature for synthetic datasets."""

    period: int
    coeffs: tuple
    phases: tuple
    gains: tuple  # per channel: acc x, y, z, gyr x, y, z

    @classmethod
    def random(cls, rng: np.random.Generator) -> "PersonModel":
        return cls(
            period=int(rng.integers(44, 57)),
            coeffs=tuple(rng.uniform(-0.5, 0.5, 3)),
            phases=tuple(rng.uniform(0, np.pi, 3)),
            gains=tuple(rng.uniform(0.3, 1.2, 6)),
        )

    def channels(self, n_cycles: int, noise: float, rng: np.random.Generator, lead: int = 20):
        """Six channels of ``n_cycles`` cycles plus ``lead`` samples of padding each side."""
        P = self.period
        base = harmonic_cycle(P, self.coeffs, self.phases)
        sig = np.tile(base, n_cycles)
        sig = np.concatenate((np.full(lead, base[P // 2]), sig, np.full(lead, base[P // 2])))
        sig = sig + 0.3 * np.sin(np.linspace(0, 6, sig.size))
        out = []
        for ch, g in enumerate(self.gains):
            shift = ch * 3
            v = g * np.roll(sig, shift) + (1.0 if ch == 0 else 0.0)
            out.append(v + rng.normal(0.0, noise, v.size))
        return np.array(out)


def write_synthetic_hapt(
    root,
    n_users: int = 6,
    periods_per_user: int = 2,
    cycles_per_period: int = 12,
    noise: float = 0.02,
    activities=(1,),
    seed: int = 0,
) -> Path:
    """Write a small dataset in the HAPT ``RawData`` layout under ``root``.

    One experiment per user; each experiment holds ``periods_per_user``
    periods of every requested activity separated by resting samples.
    """
    rng = np.random.default_rng(seed)
    raw_dir = Path(root) / "RawData"
    raw_dir.mkdir(parents=True, exist_ok=True)
    label_rows = []
    for user in range(1, n_users + 1):
        exp = user
        person = PersonModel.random(rng)
        chunks = [np.tile([[1.0], [0.0], [0.0], [0.0], [0.0], [0.0]], 50)]
        pos = 50
        for act in activities:
            variant = person if act == 1 else PersonModel(
                person.period - 4 * (act - 1), person.coeffs[::-1], person.phases, person.gains
            )
            for _ in range(periods_per_user):
                block = variant.channels(cycles_per_period, noise, rng)
                start = pos + 1
                end = pos + block.shape[1]
                label_rows.append((exp, user, act, start, end))
                chunks.append(block)
                pos = end
                rest = np.tile([[1.0], [0.0], [0.0], [0.0], [0.0], [0.0]], 40)
                rest = rest + rng.normal(0, 0.005, rest.shape)
                chunks.append(rest)
                pos += rest.shape[1]
        data = np.concatenate(chunks, axis=1)
        np.savetxt(raw_dir / f"acc_exp{exp:02d}_user{user:02d}.txt", data[:3].T, fmt="%.8e")
        np.savetxt(raw_dir / f"gyro_exp{exp:02d}_user{user:02d}.txt", data[3:].T, fmt="%.8e")
    with open(raw_dir / "labels.txt", "w") as fh:
        for row in label_rows:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return raw_dir
