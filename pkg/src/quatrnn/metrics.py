"""Forecast accuracy metrics on 3-D marker positions and run aggregation.

Positions are arrays of shape ``(T, ..., D)``: time first, spatial axis last
(``D = 3`` for markers). A 1-D array is read as a scalar trajectory. Errors
are Euclidean norms over the spatial axis, averaged over time and markers.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import stats

from .errors import DegenerateTruth, EmptySequence, InsufficientSamples, LengthMismatch, SeriesTooShort

__all__ = [
    "METRICS",
    "rmse",
    "nrmse",
    "mae",
    "jitter",
    "ci95",
    "compute_metrics",
    "MetricRow",
    "MetricsReport",
    "aggregate",
]

METRICS = ("rmse", "nrmse", "mae", "jitter")


def _points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim == 0 or x.shape[0] == 0:
        raise EmptySequence("metrics need at least one time step")
    return x


def _pair(pred, truth):
    p, t = _points(pred), _points(truth)
    if p.shape != t.shape:
        raise LengthMismatch(f"prediction {p.shape} and truth {t.shape} differ")
    return p, t


def _sq_dist(p, t) -> np.ndarray:
    d = p - t
    return np.sum(d * d, axis=-1)


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.sqrt(np.mean(_sq_dist(p, t))))


def nrmse(pred, truth) -> float:
    """RMSE divided by the RMS deviation of ``truth`` from its per-channel time mean."""
    p, t = _pair(pred, truth)
    spread = float(np.sqrt(np.mean(_sq_dist(t, t.mean(axis=0)))))
    if spread < 1e-9:
        raise DegenerateTruth("ground truth has no variability to normalise by")
    return rmse(p, t) / spread


def mae(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.mean(np.sqrt(_sq_dist(p, t))))


def jitter(pred) -> float:
    """Mean Euclidean displacement between consecutive predicted positions."""
    p = _points(pred)
    if p.shape[0] < 2:
        raise SeriesTooShort("jitter needs at least two time steps")
    return float(np.mean(np.sqrt(_sq_dist(p[1:], p[:-1]))))


def ci95(values) -> tuple:
    """Mean and Student-t 95% half-width ``t_{0.975, n-1} s / sqrt(n)``.

    ``s`` is the root-mean-square deviation from the mean (divisor ``n``),
    so ``{0, 2}`` gives ``12.7062 / sqrt(2)``.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 2:
        raise InsufficientSamples(f"confidence interval needs n >= 2, got {v.size}")
    mean = float(v.mean())
    s = float(v.std())
    return mean, float(stats.t.ppf(0.975, v.size - 1) * s / math.sqrt(v.size))


def compute_metrics(pred, truth) -> dict:
    return {"rmse": rmse(pred, truth), "nrmse": nrmse(pred, truth), "mae": mae(pred, truth),
            "jitter": jitter(pred)}


@dataclass
class MetricRow:
    """One method and breathing class; ``ci`` holds half-widths when ``runs >= 2``."""

    method: str
    klass: str
    runs: int
    rmse: float
    nrmse: float
    mae: float
    jitter: float
    ci: dict = field(default_factory=dict)

    def value(self, metric: str) -> float:
        return getattr(self, metric)


def aggregate(per_run: list, method: str, klass: str = "all") -> MetricRow:
    """Average per-run metric dicts; each run is itself a mean over sequences."""
    if not per_run:
        raise InsufficientSamples("no runs to aggregate")
    means, ci = {}, {}
    for m in METRICS:
        vals = [r[m] for r in per_run]
        if len(vals) >= 2:
            means[m], ci[m] = ci95(vals)
        else:
            means[m] = float(vals[0])
    return MetricRow(method, klass, len(per_run), ci=ci, **means)


@dataclass
class MetricsReport:
    """Method x breathing-class x metric table."""

    rows: list = field(default_factory=list)

    @property
    def has_ci(self) -> bool:
        return any(r.ci for r in self.rows)

    def _columns(self) -> list:
        cols = ["method", "class", "runs"]
        for m in METRICS:
            cols.append(m)
            if self.has_ci:
                cols.append(f"{m}_ci95")
        return cols

    def _cells(self, row: MetricRow, fmt) -> list:
        cells = [row.method, row.klass, str(row.runs)]
        for m in METRICS:
            cells.append(fmt(row.value(m)))
            if self.has_ci:
                cells.append(fmt(row.ci[m]) if m in row.ci else "")
        return cells

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._columns())
        for r in self.rows:
            w.writerow(self._cells(r, repr))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricsReport":
        reader = csv.DictReader(io.StringIO(text))
        rows = []
        for rec in reader:
            ci = {m: float(rec[f"{m}_ci95"]) for m in METRICS if rec.get(f"{m}_ci95")}
            rows.append(MetricRow(rec["method"], rec["class"], int(rec["runs"]), ci=ci,
                                  **{m: float(rec[m]) for m in METRICS}))
        return cls(rows)

    def to_table(self, digits: int = 3) -> str:
        """Aligned plain-text table; CI columns print as ``value ± half-width``."""
        head = ["method", "class", "runs"] + [m.upper() if m != "nrmse" else "nRMSE" for m in METRICS]
        body = []
        for r in self.rows:
            cells = [r.method, r.klass, str(r.runs)]
            for m in METRICS:
                s = f"{r.value(m):.{digits}f}"
                if m in r.ci:
                    s += f" ± {r.ci[m]:.{digits}f}"
                cells.append(s)
            body.append(cells)
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [head] + body]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, MetricsReport):
            return NotImplemented
        return [tuple(getattr(r, f.name) for f in fields(r)) for r in self.rows] == \
            [tuple(getattr(r, f.name) for f in fields(r)) for r in other.rows]
