"""Marker trajectories: CSV ingestion, quaternion encoding, scaling, windowing, synthesis.

CSV schema (header row required)::

    # label=regular            <- optional metadata line
    time,m1x,m1y,m1z,m2x,m2y,m2z,m3x,m3y,m3z
    0.0,12.1,3.4,25.0,...

Time is in seconds, positions in mm, marker-major ``x, y, z`` column order.
Files from other sources need an adapter that writes this layout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (ConfigError, DegenerateChannel, MissingColumns, NonUniformSampling, ParseError,
                     SeriesTooShort)

__all__ = [
    "COLUMNS",
    "MarkerSeries",
    "QuatSeries",
    "SplitSpec",
    "NormStats",
    "SynthConfig",
    "load_csv",
    "save_csv",
    "encode_pure_quaternion",
    "decode_pure_quaternion",
    "normalize",
    "make_windows",
    "window_count",
    "synth_breathing",
    "inject_outliers",
]

N_MARKERS = 3
COLUMNS = ["time"] + [f"m{m}{ax}" for m in range(1, N_MARKERS + 1) for ax in "xyz"]

# Half of the physiological motion ranges per axis (mm): superior-inferior,
# left-right, antero-posterior.
AXIS_AMPLITUDE = {"x": (3.0, 20.0), "y": (1.0, 5.0), "z": (9.0, 22.5)}


@dataclass
class MarkerSeries:
    """Uniformly sampled 3-D positions of three markers, ``positions`` is ``(T, 3, 3)`` mm."""

    timestamps: np.ndarray
    positions: np.ndarray
    sample_rate: float = 10.0
    label: str | None = None
    outliers: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 3 or self.positions.shape[1:] != (N_MARKERS, 3):
            raise ConfigError(f"positions must be (T, 3, 3), got {self.positions.shape}")
        if self.timestamps.shape != (self.positions.shape[0],):
            raise ConfigError("one timestamp per sample required")

    def __len__(self):
        return self.positions.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def validate(self, bounds: tuple | None = None):
        if not np.all(np.isfinite(self.positions)):
            raise ConfigError("positions contain non-finite values")
        check_uniform(self.timestamps, self.sample_rate)
        if bounds is not None:
            lo, hi = bounds
            bad = (self.positions < lo) | (self.positions > hi)
            if np.any(bad):
                t, m, a = np.argwhere(bad)[0]
                raise ConfigError(f"position out of bounds at sample {t}, marker {m + 1}, axis {'xyz'[a]}")
        return self


def check_uniform(timestamps, sample_rate, tol: float = 1e-6):
    if len(timestamps) < 2:
        return
    dt = np.diff(timestamps)
    bad = np.abs(dt - 1.0 / sample_rate) > tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NonUniformSampling(
            f"step {i + 1}: interval {dt[i]:.6g} s differs from 1/{sample_rate:g} s")


def load_csv(path, sample_rate: float | None = None, bounds: tuple | None = None) -> MarkerSeries:
    """Read and validate a marker CSV; the sample rate is inferred when not given."""
    path = Path(path)
    label = None
    with path.open(newline="") as fh:
        lines = fh.read().splitlines()
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        meta = lines[start].lstrip("#").strip()
        if meta.startswith("label="):
            label = meta.split("=", 1)[1].strip() or None
        start += 1
    reader = csv.reader(lines[start:])
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file", row=start + 1) from None
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise MissingColumns(missing)
    idx = [header.index(c) for c in COLUMNS]
    rows = []
    for r, row in enumerate(reader, start=start + 2):
        if not row or all(not c.strip() for c in row):
            continue
        vals = []
        for name, i in zip(COLUMNS, idx):
            try:
                vals.append(float(row[i]))
            except (IndexError, ValueError):
                raise ParseError("not a number", row=r, column=name) from None
        rows.append(vals)
    if not rows:
        raise ParseError("no data rows", row=start + 2)
    data = np.array(rows)
    t = data[:, 0]
    if sample_rate is None:
        if len(t) < 2:
            raise ParseError("cannot infer the sample rate from one row; pass sample_rate", row=start + 2)
        sample_rate = float(round(1.0 / np.median(np.diff(t)), 6))
    ms = MarkerSeries(t, data[:, 1:].reshape(-1, N_MARKERS, 3), sample_rate, label)
    return ms.validate(bounds)


def save_csv(ms: MarkerSeries, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        if ms.label:
            fh.write(f"# label={ms.label}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for t, p in zip(ms.timestamps, ms.positions.reshape(len(ms), -1)):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in p])
    return path


@dataclass
class QuatSeries:
    """Per-step vector of pure quaternions, ``values`` is ``(T, 3, 4)``."""

    values: np.ndarray
    sample_rate: float = 10.0
    label: str | None = None

    def __len__(self):
        return self.values.shape[0]


def encode_pure_quaternion(ms: MarkerSeries) -> QuatSeries:
    """Position ``(x, y, z)`` becomes ``0 + x i + y j + z k`` for every marker."""
    v = np.zeros(ms.positions.shape[:-1] + (4,))
    v[..., 1:] = ms.positions
    return QuatSeries(v, ms.sample_rate, ms.label)


def decode_pure_quaternion(qs, sample_rate: float | None = None) -> MarkerSeries:
    values = qs.values if isinstance(qs, QuatSeries) else np.asarray(qs)
    rate = sample_rate or (qs.sample_rate if isinstance(qs, QuatSeries) else 10.0)
    T = values.shape[0]
    label = qs.label if isinstance(qs, QuatSeries) else None
    return MarkerSeries(np.arange(T) / rate, values[..., 1:].copy(), rate, label)


@dataclass(frozen=True)
class SplitSpec:
    """Train and validation durations in seconds; the remainder is test."""

    train: float = 30.0
    validation: float = 30.0

    def bounds(self, n_samples: int, sample_rate: float) -> tuple:
        """Sample indices ``(train_end, validation_end)``."""
        a = int(round(self.train * sample_rate))
        b = a + int(round(self.validation * sample_rate))
        if a < 1:
            raise ConfigError("training split must contain at least one sample")
        if b > n_samples:
            raise ConfigError(f"train + validation ({b} samples) exceeds the series ({n_samples})")
        return a, b


@dataclass(frozen=True)
class NormStats:
    """Per-channel affine map ``(x - offset) / scale`` on the imaginary parts, ``(3, 3)`` each."""

    offset: np.ndarray
    scale: np.ndarray

    def apply(self, values) -> np.ndarray:
        v = np.array(values, dtype=float)
        v[..., 1:] = (v[..., 1:] - self.offset) / self.scale
        return v

    def inverse(self, values) -> np.ndarray:
        v = np.array(values, dtype=float)
        v[..., 1:] = v[..., 1:] * self.scale + self.offset
        return v


def normalize(qs, split: SplitSpec | int, strict: bool = False):
    """Standardise every marker axis with mean/std of the training window only.

    ``split`` is a :class:`SplitSpec` or a training-window length in
    samples. A channel with std below 1e-9 keeps unit scale and zero offset
    (or raises :class:`DegenerateChannel` when ``strict``).
    """
    values = qs.values if isinstance(qs, QuatSeries) else np.asarray(qs, dtype=float)
    rate = qs.sample_rate if isinstance(qs, QuatSeries) else 10.0
    n_train = split if isinstance(split, (int, np.integer)) else split.bounds(len(values), rate)[0]
    if n_train < 1:
        raise ConfigError("statistics window is empty")
    train = values[:n_train, :, 1:]
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    degenerate = std < 1e-9
    if np.any(degenerate) and strict:
        m, a = np.argwhere(degenerate)[0]
        raise DegenerateChannel(f"marker {m + 1} axis {'xyz'[a]} is constant over the training window")
    stats = NormStats(np.where(degenerate, 0.0, mean), np.where(degenerate, 1.0, std))
    out = stats.apply(values)
    if isinstance(qs, QuatSeries):
        return QuatSeries(out, qs.sample_rate, qs.label), stats
    return out, stats


def window_count(T: int, l: int, H: int) -> int:
    return max(0, T - l - H)


def make_windows(qs, l: int, H: int):
    """Regressor windows ``[n-l+1 .. n]`` paired with the sample at ``n + H``.

    ``n`` runs from ``l`` to ``T - 1 - H``, giving ``T - l - H`` windows; the
    window ending at ``l - 1`` is not emitted, so every window has at least
    one earlier sample available. Returns ``(inputs, targets)`` with shapes ``(W, l, C, 4)`` and ``(W, C, 4)``.
    """
    values = qs.values if isinstance(qs, QuatSeries) else np.asarray(qs, dtype=float)
    if l < 1 or H < 0:
        raise ConfigError("need l >= 1 and H >= 0")
    T = values.shape[0]
    count = window_count(T, l, H)
    if count < 1:
        raise SeriesTooShort(f"series of length {T} has no window for l={l}, H={H}")
    view = np.lib.stride_tricks.sliding_window_view(values, l, axis=0)  # (T-l+1, C, 4, l)
    inputs = np.moveaxis(view[1:count + 1], -1, 1).copy()
    targets = values[l + H:l + H + count].copy()
    return inputs, targets


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic breathing generator (mm, s, Hz)."""

    duration: float = 180.0
    rate: float = 10.0
    harmonics: int = 2
    drift: float = 2.0
    noise: float = 0.1
    outlier_rate: float = 0.0
    outlier_scale: float = 8.0
    outlier_start: float = 0.0
    outlier_end: float | None = None
    irregular: bool = False
    seed: int = 0

    def __post_init__(self):
        if not (self.duration > 0 and self.rate > 0):
            raise ConfigError("duration and rate must be > 0")
        if not 1 <= self.harmonics <= 3:
            raise ConfigError("harmonics must be 1, 2 or 3")
        if self.noise < 0 or self.drift < 0 or self.outlier_scale < 0:
            raise ConfigError("noise, drift and outlier_scale must be >= 0")
        if not 0 <= self.outlier_rate <= 1:
            raise ConfigError("outlier_rate must lie in [0, 1]")

    @property
    def label(self) -> str:
        return "irregular" if self.irregular else "regular"


def synth_breathing(cfg: SynthConfig) -> MarkerSeries:
    """Deterministic breathing-like trajectories for three correlated markers.

    Each axis is a sum of ``harmonics`` sinusoids with a 3-5 s base period,
    a slow drift and Gaussian noise. Markers are scaled, phase-shifted copies
    of one pattern. The irregular preset adds frequency and amplitude
    modulation, short bursts of faster oscillation and abrupt baseline
    shifts. Outliers, when requested, are
    injected with :func:`inject_outliers`.
    """
    rng = np.random.default_rng(cfg.seed)
    T = int(round(cfg.duration * cfg.rate))
    t = np.arange(T) / cfg.rate
    f0 = 1.0 / rng.uniform(3.0, 5.0)
    if cfg.irregular:
        # slow frequency wander and talking-like amplitude episodes
        fm = 0.25 * f0 * np.sin(2 * np.pi * t / rng.uniform(20, 40) + rng.uniform(0, 2 * np.pi))
        phase = 2 * np.pi * np.cumsum(f0 + fm) / cfg.rate
        am = 1.0 + 0.4 * np.sin(2 * np.pi * t / rng.uniform(8, 15) + rng.uniform(0, 2 * np.pi))
    else:
        phase = 2 * np.pi * f0 * t
        am = np.ones(T)
    ratios = [1.0] + [rng.uniform(0.1, 0.4) / k for k in range(2, cfg.harmonics + 1)]
    hphase = [0.0] + [rng.uniform(0, 2 * np.pi) for _ in range(2, cfg.harmonics + 1)]
    pattern = am * sum(r * np.sin(k * phase + p) for k, (r, p) in enumerate(zip(ratios, hphase), start=1))
    if cfg.irregular:
        # talking/laughing-like episodes: short bursts of faster oscillation
        for _ in range(rng.poisson(cfg.duration / 30.0) + 1):
            start, length = rng.uniform(0, cfg.duration), rng.uniform(3.0, 8.0)
            window = np.clip(np.minimum(t - start, start + length - t), 0.0, 1.0)
            pattern = pattern + 0.3 * window * np.sin(2 * np.pi * rng.uniform(0.8, 1.5) * t)

    pos = np.zeros((T, N_MARKERS, 3))
    slow = rng.uniform(60.0, 120.0)
    for a, ax in enumerate("xyz"):
        amp = rng.uniform(*AXIS_AMPLITUDE[ax])
        axis_lag = rng.uniform(-0.2, 0.2)
        direction = rng.choice([-1.0, 1.0])
        trend = cfg.drift * (direction * t / cfg.duration + 0.5 * np.sin(2 * np.pi * t / slow + a))
        for m in range(N_MARKERS):
            gain = rng.uniform(0.6, 1.2)
            lag = axis_lag + rng.uniform(-0.3, 0.3)
            shifted = np.interp(t - lag / (2 * np.pi * f0), t, pattern)
            pos[:, m, a] = 50.0 * m + 20.0 * a + gain * amp * shifted + trend
    if cfg.irregular:
        n_shifts = rng.poisson(cfg.duration / 40.0)
        for _ in range(n_shifts):
            at = rng.integers(0, T)
            pos[at:] += rng.normal(0.0, 1.5, size=(1, N_MARKERS, 3))
    if cfg.noise > 0:
        pos += rng.normal(0.0, cfg.noise, size=pos.shape)
    ms = MarkerSeries(t, pos, cfg.rate, cfg.label)
    if cfg.outlier_rate > 0:
        ms = inject_outliers(ms, cfg.outlier_rate, cfg.outlier_scale, rng, cfg.outlier_start, cfg.outlier_end)
    return ms


def inject_outliers(ms: MarkerSeries, rate: float, scale: float, rng=None, start: float = 0.0,
                    end: float | None = None) -> MarkerSeries:
    """Add sparse impulses of ``scale`` times each channel's RMS deviation.

    Every (sample, marker, axis) inside ``[start, end)`` seconds is hit
    independently with probability ``rate``, with a random sign. The mask of
    hits is stored in the returned series' ``outliers`` attribute.
    """
    if not 0 <= rate <= 1:
        raise ConfigError("outlier rate must lie in [0, 1]")
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    pos = ms.positions.copy()
    centred = pos - pos.mean(axis=0)
    rms = np.sqrt(np.mean(centred * centred, axis=0))
    lo = int(round(start * ms.sample_rate))
    hi = len(ms) if end is None else min(len(ms), int(round(end * ms.sample_rate)))
    mask = np.zeros(pos.shape, dtype=bool)
    hits = rng.random(size=(max(hi - lo, 0),) + pos.shape[1:]) < rate
    signs = rng.choice([-1.0, 1.0], size=hits.shape)
    mask[lo:hi] = hits
    pos[lo:hi] += hits * signs * scale * rms
    return replace(ms, positions=pos, outliers=mask)
