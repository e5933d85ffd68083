"""Experiment harness: configuration, the online forecasting protocol and the commands.

Protocol for one sequence (samples at rate ``f``, horizon ``H`` samples):

* positions are encoded as pure quaternions and standardised with statistics
  of the observed training window;
* at every time ``n`` the forecaster first adapts on the regressors ending at
  ``n - H - N + 1 .. n - H`` with targets ``H`` samples later (the newest
  target is the sample observed at ``n``), then predicts the sample at
  ``n + H`` from the regressors ending at ``n - N + 1 .. n``;
* predictions are mapped back to mm and scored against the clean series.

Grid search runs this on train + validation only and scores RMSE on the
validation window. Evaluation runs it on the whole sequence and scores the
test remainder; adaptation continues through the test segment unless
``adapt_in_test`` is off. Outliers, when configured, are injected into the
train + validation portion of the observed series only.

Every model seed is derived from the master seed and a string key (method,
grid point, run index) so results do not depend on iteration order or on how
many runs were requested.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .data import (MarkerSeries, SplitSpec, SynthConfig, encode_pure_quaternion, inject_outliers, load_csv,
                   normalize, save_csv, synth_breathing)
from .errors import ConfigError, QuatRNNError
from .forecasters import METHODS, HyperParams, is_stochastic, make_forecaster
from .losses import KernelConfig, mse_loss, quat_gauss_kernel
from .metrics import METRICS, MetricsReport, aggregate, compute_metrics

__all__ = [
    "ExperimentConfig",
    "Sequence",
    "derive_seed",
    "load_config",
    "build_sequences",
    "run_online",
    "score_sequence",
    "gridsearch",
    "evaluate",
    "benchmark",
    "synth",
    "plotdata",
    "DEFAULT_GRIDS",
    "DEFAULT_HYPERPARAMS",
]

log = logging.getLogger(__name__)

SIGMA_GRID = [0.5, 1.0, 2.0, 5.0]

# Desk-scale defaults. Network updates are sums over the window and the
# outputs, so useful learning rates sit well below the 0.02-0.2 range that
# suits mean-normalised updates.
DEFAULT_GRIDS = {
    "qrnn-mcc": {"alpha": [0.0005, 0.001, 0.002], "hidden": [10, 20], "l": [10, 20, 30], "sigma": SIGMA_GRID},
    "qrnn-mse": {"alpha": [0.0005, 0.001, 0.002], "hidden": [10, 20], "l": [10, 20, 30]},
    "rnn-mcc": {"alpha": [0.0005, 0.001, 0.002], "hidden": [20, 40], "l": [10, 20, 30], "sigma": SIGMA_GRID},
    "rnn-mse": {"alpha": [0.0005, 0.001, 0.002], "hidden": [20, 40], "l": [10, 20, 30]},
    "qlms": {"alpha": [0.0005, 0.001, 0.002, 0.005], "l": [10, 20, 30]},
    "lms": {"alpha": [0.0005, 0.001, 0.002, 0.005], "l": [10, 20, 30]},
}

DEFAULT_HYPERPARAMS = {
    "qrnn-mcc": {"alpha": 0.0005, "hidden": 10, "l": 30, "sigma": 0.5},
    "qrnn-mse": {"alpha": 0.0005, "hidden": 10, "l": 30},
    "rnn-mcc": {"alpha": 0.0005, "hidden": 20, "l": 30, "sigma": 0.5},
    "rnn-mse": {"alpha": 0.0005, "hidden": 20, "l": 30},
    "qlms": {"alpha": 0.001, "l": 30},
    "lms": {"alpha": 0.002, "l": 30},
}

HP_KEYS = {"alpha", "hidden", "l", "sigma", "window", "clip_norm"}


def derive_seed(master: int, *key) -> int:
    """Stable 32-bit seed from the master seed and a tuple of labels."""
    words = [zlib.crc32(str(k).encode()) for k in key]
    return int(np.random.SeedSequence([int(master) & 0xFFFFFFFF, *words]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    methods: list = field(default_factory=lambda: list(METHODS))
    seed: int = 0
    horizon: float = 2.0
    split: SplitSpec = field(default_factory=SplitSpec)
    cv_runs: int = 1
    eval_runs: int = 3
    clip_norm: float | None = 1.0
    adapt_in_test: bool = True
    csv: list = field(default_factory=list)
    synthetic: dict = field(default_factory=lambda: {"count": 2})
    outliers: dict | None = None
    grids: dict = field(default_factory=dict)
    hyperparams: dict = field(default_factory=dict)
    benchmark: dict = field(default_factory=lambda: {"hidden": 45, "l": 90, "steps": 100, "warmup": 5})
    plot: dict = field(default_factory=lambda: {"sigma": 1.0, "extent": 3.0, "points": 13})
    jobs: int = 1

    def validate(self):
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
        if not self.methods:
            raise ConfigError("at least one method required")
        if self.cv_runs < 1 or self.eval_runs < 1:
            raise ConfigError("run counts must be >= 1")
        if not self.horizon >= 0:
            raise ConfigError("horizon must be >= 0")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for m, grid in self.grids.items():
            if m not in METHODS:
                raise ConfigError(f"grid for unknown method {m!r}")
            for k, v in grid.items():
                if k not in HP_KEYS:
                    raise ConfigError(f"unknown grid parameter {k!r} for {m}")
                if not isinstance(v, list) or not v:
                    raise ConfigError(f"grid {m}.{k} must be a nonempty list")
            for point in self.grid_points(m):
                HyperParams(**point)
        for m, hp in self.hyperparams.items():
            if m not in METHODS:
                raise ConfigError(f"hyperparameters for unknown method {m!r}")
            unknown = set(hp) - HP_KEYS
            if unknown:
                raise ConfigError(f"unknown hyperparameters {sorted(unknown)} for {m}")
            HyperParams(**hp)
        if not self.csv and not self.synthetic:
            raise ConfigError("configure csv paths or a synthetic dataset")
        if self.synthetic:
            unknown = set(self.synthetic) - {"count", "duration", "rate", "harmonics", "drift", "noise",
                                             "irregular", "seed"}
            if unknown:
                raise ConfigError(f"unknown synthetic keys {sorted(unknown)}")
            if int(self.synthetic.get("count", 1)) < 1:
                raise ConfigError("synthetic count must be >= 1")
            if self.synthetic.get("irregular", "mixed") not in ("mixed", True, False):
                raise ConfigError("synthetic.irregular must be true, false or mixed")
            rate = float(self.synthetic.get("rate", 10.0))
            if abs(self.horizon * rate - round(self.horizon * rate)) > 1e-9:
                raise ConfigError("horizon * rate must be an integer number of samples")
        if self.outliers is not None:
            unknown = set(self.outliers) - {"rate", "scale"}
            if unknown:
                raise ConfigError(f"unknown outlier keys {sorted(unknown)}")
            if not 0 <= float(self.outliers.get("rate", 0.05)) <= 1:
                raise ConfigError("outlier rate must lie in [0, 1]")
        return self

    def grid_points(self, method: str) -> list:
        """Cartesian product of the method's grid in canonical (sorted) order."""
        grid = self.grids.get(method, DEFAULT_GRIDS[method])
        keys = sorted(grid)
        points = []
        for combo in itertools.product(*(sorted(grid[k], key=lambda v: (v is None, v)) for k in keys)):
            points.append(self.hp_dict(dict(zip(keys, combo))))
        return points

    def hp_dict(self, hp: dict) -> dict:
        out = dict(hp)
        out.setdefault("clip_norm", self.clip_norm)
        return out

    def hyperparams_for(self, method: str, best: dict | None = None) -> HyperParams:
        if method in self.hyperparams:
            return HyperParams(**self.hp_dict(self.hyperparams[method]))
        if best and method in best:
            return HyperParams(**best[method])
        return HyperParams(**self.hp_dict(DEFAULT_HYPERPARAMS[method]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split"] = {"train": self.split.train, "validation": self.split.validation}
        return d


CONFIG_KEYS = {"methods", "seed", "horizon", "split", "runs", "clip_norm", "adapt_in_test", "data", "outliers",
               "grids", "hyperparams", "benchmark", "plot", "jobs"}


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    raw = dict(raw or {})
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = ExperimentConfig()
    if "methods" in raw:
        m = raw["methods"]
        cfg.methods = [m] if isinstance(m, str) else list(m)
    for key in ("seed", "jobs"):
        if key in raw:
            cfg.__dict__[key] = int(raw[key])
    if "horizon" in raw:
        cfg.horizon = float(raw["horizon"])
    if "clip_norm" in raw:
        cfg.clip_norm = None if raw["clip_norm"] is None else float(raw["clip_norm"])
    if "adapt_in_test" in raw:
        cfg.adapt_in_test = bool(raw["adapt_in_test"])
    if "split" in raw:
        s = raw["split"] or {}
        cfg.split = SplitSpec(float(s.get("train", 30.0)), float(s.get("validation", 30.0)))
    if "runs" in raw:
        r = raw["runs"] or {}
        if set(r) - {"cv", "eval"}:
            raise ConfigError("runs accepts only cv and eval")
        cfg.cv_runs = int(r.get("cv", cfg.cv_runs))
        cfg.eval_runs = int(r.get("eval", cfg.eval_runs))
    if "data" in raw:
        d = raw["data"] or {}
        if set(d) - {"csv", "synthetic"}:
            raise ConfigError("data accepts only csv and synthetic")
        cfg.csv = [str(p) for p in d.get("csv", [])]
        cfg.synthetic = dict(d.get("synthetic") or {}) if "synthetic" in d or not cfg.csv else {}
    if "outliers" in raw:
        cfg.outliers = dict(raw["outliers"]) if raw["outliers"] else None
    for key in ("grids", "hyperparams"):
        if key in raw:
            cfg.__dict__[key] = {k: dict(v) for k, v in (raw[key] or {}).items()}
    for key in ("benchmark", "plot"):
        if key in raw:
            merged = dict(getattr(cfg, key))
            merged.update(raw[key] or {})
            cfg.__dict__[key] = merged
    return cfg.validate()


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config (defaults when ``path`` is None) and apply CLI overrides."""
    raw = {}
    if path is not None:
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "method":
            raw["methods"] = [v]
        elif k == "runs":
            raw.setdefault("runs", {})
            raw["runs"] = {"cv": int(v), "eval": int(v)}
        else:
            raw[k] = v
    return config_from_dict(raw)


@dataclass
class Sequence:
    """One recording: ``clean`` is scored against, ``observed`` is what the models see."""

    name: str
    label: str
    clean: MarkerSeries
    observed: MarkerSeries


def build_sequences(cfg: ExperimentConfig) -> list:
    seqs = []
    for path in cfg.csv:
        ms = load_csv(path)
        seqs.append(Sequence(Path(path).stem, ms.label or "all", ms, ms))
    if cfg.synthetic:
        s = dict(cfg.synthetic)
        count = int(s.pop("count", 1))
        mode = s.pop("irregular", "mixed")
        data_seed = int(s.pop("seed", cfg.seed))
        for i in range(count):
            irregular = (i % 2 == 1) if mode == "mixed" else bool(mode)
            sc = SynthConfig(irregular=irregular, seed=derive_seed(data_seed, "synth", i), **s)
            ms = synth_breathing(sc)
            seqs.append(Sequence(f"synth_{i:02d}_{sc.label}", sc.label, ms, ms))
    if cfg.outliers:
        rate = float(cfg.outliers.get("rate", 0.05))
        scale = float(cfg.outliers.get("scale", 8.0))
        for i, seq in enumerate(seqs):
            rng = np.random.default_rng(derive_seed(cfg.seed, "outliers", seq.name))
            end = cfg.split.train + cfg.split.validation
            seq.observed = inject_outliers(seq.clean, rate, scale, rng, 0.0, end)
    return seqs


def run_online(forecaster, observed, l: int, H: int, eval_start: int, eval_end: int | None = None,
               adapt_until: int | None = None):
    """Drive ``forecaster`` through ``observed`` ``(T, M, 4)``; see the module docstring.

    Returns ``(predictions, target_times)`` for target times in
    ``[eval_start, eval_end)``. Updates use only samples up to the current
    time and stop at ``adapt_until`` when given.
    """
    observed = np.asarray(observed, dtype=float)
    T = observed.shape[0]
    eval_end = T if eval_end is None else min(eval_end, T)
    if T < l:
        raise ConfigError(f"sequence of {T} samples is shorter than the regressor ({l})")
    regs = np.moveaxis(np.lib.stride_tricks.sliding_window_view(observed, l, axis=0), -1, 1)
    N = forecaster.window
    preds, times = [], []
    for n in range(T):
        m_hi = n - H
        if m_hi >= l - 1 and (adapt_until is None or n < adapt_until):
            m_lo = max(l - 1, m_hi - N + 1)
            forecaster.update(regs[m_lo - l + 1:m_hi - l + 2], observed[m_lo + H:n + 1])
        t = n + H
        if eval_start <= t < eval_end and n >= l - 1:
            m_lo = max(l - 1, n - N + 1)
            preds.append(forecaster.predict(regs[m_lo - l + 1:n - l + 2]))
            times.append(t)
    return np.array(preds), np.array(times, dtype=int)


def score_sequence(seq: Sequence, method: str, hp: HyperParams, seed: int, H: int, split: SplitSpec,
                   phase: str, adapt_in_test: bool = True):
    """Run one method on one sequence; returns ``(metrics, predictions_mm, target_times)``.

    ``phase`` is ``"validation"`` (data truncated at the end of validation)
    or ``"test"``.
    """
    q_obs = encode_pure_quaternion(seq.observed)
    q_clean = encode_pure_quaternion(seq.clean)
    a, b = split.bounds(len(q_obs), q_obs.sample_rate)
    normed, stats = normalize(q_obs, a)
    fc = make_forecaster(method, hp, seed, n_markers=normed.values.shape[1])
    if phase == "validation":
        p, t = run_online(fc, normed.values[:b], hp.l, H, a, b)
    else:
        p, t = run_online(fc, normed.values, hp.l, H, b, None, None if adapt_in_test else b)
    if len(t) == 0:
        raise ConfigError(f"{seq.name}: no {phase} targets for l={hp.l}, H={H}")
    pred_mm = stats.inverse(p)[..., 1:]
    truth = q_clean.values[t][..., 1:]
    return compute_metrics(pred_mm, truth), pred_mm, t


# --- parallel execution helpers --------------------------------------------------------------

def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


def _cv_task(task):
    seqs, method, hp_d, seed, H, split = task
    hp = HyperParams(**hp_d)
    try:
        vals = [score_sequence(s, method, hp, seed, H, split, "validation")[0]["rmse"] for s in seqs]
        return float(np.mean(vals)), "ok"
    except (QuatRNNError, FloatingPointError, ValueError) as exc:
        return float("inf"), f"failed: {type(exc).__name__}"


def _eval_task(task):
    seqs, method, hp_d, seed, H, split, adapt = task
    hp = HyperParams(**hp_d)
    out = []
    for s in seqs:
        metrics, pred, t = score_sequence(s, method, hp, seed, H, split, "test", adapt)
        out.append((metrics, pred, t))
    return out


def _point_key(point: dict) -> str:
    return json.dumps(point, sort_keys=True)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def gridsearch(cfg: ExperimentConfig, seqs: list | None = None) -> dict:
    """Validation RMSE for every grid point; returns ``{"table": rows, "best": {method: point}}``."""
    seqs = build_sequences(cfg) if seqs is None else seqs
    rate = seqs[0].observed.sample_rate
    H = int(round(cfg.horizon * rate))
    rows, best = [], {}
    for method in cfg.methods:
        points = cfg.grid_points(method)
        runs = cfg.cv_runs if is_stochastic(method) else 1
        tasks = [(seqs, method, p, derive_seed(cfg.seed, "cv", method, _point_key(p), r), H, cfg.split)
                 for p in points for r in range(runs)]
        results = _map(_cv_task, tasks, cfg.jobs)
        for i, p in enumerate(points):
            chunk = results[i * runs:(i + 1) * runs]
            failed = [s for _, s in chunk if s != "ok"]
            score = float("inf") if failed else float(np.mean([v for v, _ in chunk]))
            rows.append({"method": method, **{k: p.get(k) for k in sorted(HP_KEYS)}, "runs": runs,
                         "val_rmse": score, "status": failed[0] if failed else "ok"})
        scored = [(r["val_rmse"], _point_key(p), p) for r, p in zip(rows[-len(points):], points)
                  if math.isfinite(r["val_rmse"])]
        if scored:
            best[method] = min(scored, key=lambda x: (x[0], x[1]))[2]
        else:
            log.warning("every grid point failed for %s", method)
    return {"table": rows, "best": best}


def grid_table_csv(rows: list) -> str:
    buf = io.StringIO()
    cols = ["method"] + sorted(HP_KEYS) + ["runs", "val_rmse", "status"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def evaluate(cfg: ExperimentConfig, seqs: list | None = None, best: dict | None = None) -> dict:
    """Test-segment metrics per method, run and sequence, aggregated into a report."""
    seqs = build_sequences(cfg) if seqs is None else seqs
    rate = seqs[0].observed.sample_rate
    H = int(round(cfg.horizon * rate))
    labels = sorted({s.label for s in seqs} - {"all"})
    report = MetricsReport()
    per_run_rows, traces, chosen = [], {}, {}
    for method in cfg.methods:
        hp = cfg.hyperparams_for(method, best)
        chosen[method] = hp.as_dict()
        runs = cfg.eval_runs if is_stochastic(method) else 1
        tasks = [(seqs, method, hp.as_dict(), derive_seed(cfg.seed, "eval", method, r), H, cfg.split,
                  cfg.adapt_in_test) for r in range(runs)]
        results = _map(_eval_task, tasks, cfg.jobs)
        by_class = {"all": []}
        by_class.update({lab: [] for lab in labels})
        for r, res in enumerate(results):
            for seq, (m, pred, t) in zip(seqs, res):
                per_run_rows.append({"method": method, "run": r, "sequence": seq.name, "class": seq.label, **m})
                if r == 0:
                    traces[(method, seq.name)] = (t, pred, encode_pure_quaternion(seq.clean).values[t][..., 1:])
            for klass in by_class:
                members = [m for seq, (m, _, _) in zip(seqs, res) if klass == "all" or seq.label == klass]
                by_class[klass].append({k: float(np.mean([m[k] for m in members])) for k in METRICS})
        for klass, per_run in by_class.items():
            report.rows.append(aggregate(per_run, method, klass))
    return {"report": report, "runs": per_run_rows, "traces": traces, "hyperparams": chosen}


def runs_csv(rows: list) -> str:
    buf = io.StringIO()
    cols = ["method", "run", "sequence", "class"] + list(METRICS)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def trace_csv(t, pred, truth, rate: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    axes = [f"m{m + 1}{ax}" for m in range(pred.shape[1]) for ax in "xyz"]
    w.writerow(["time"] + [f"true_{a}" for a in axes] + [f"pred_{a}" for a in axes])
    for ti, tr, pr in zip(t, truth.reshape(len(t), -1), pred.reshape(len(t), -1)):
        w.writerow([repr(ti / rate)] + [repr(float(v)) for v in tr] + [repr(float(v)) for v in pr])
    return buf.getvalue()


def benchmark(cfg: ExperimentConfig) -> list:
    """Median and 95th-percentile wall-clock cost of one update + predict step per method (ms)."""
    b = cfg.benchmark
    steps, warmup = int(b.get("steps", 100)), int(b.get("warmup", 5))
    l = int(b.get("l", 90))
    hidden = int(b.get("hidden", 45))
    seq = synth_breathing(SynthConfig(duration=max(60.0, (l + steps + warmup + 40) / 10.0), seed=cfg.seed))
    values, _ = normalize(encode_pure_quaternion(seq), SplitSpec(30.0, 0.0))
    data = values.values
    regs = np.moveaxis(np.lib.stride_tricks.sliding_window_view(data, l, axis=0), -1, 1)
    H = int(round(cfg.horizon * seq.sample_rate))
    rows = []
    for method in cfg.methods:
        base = cfg.hyperparams_for(method)
        h = hidden * 2 if method.startswith("rnn") else hidden
        hp = base.with_(l=l, hidden=h, window=b.get("window", base.window))
        fc = make_forecaster(method, hp, derive_seed(cfg.seed, "bench", method))
        N = fc.window
        times = []
        for k in range(warmup + steps):
            n = l - 1 + H + N - 1 + k
            X = regs[n - H - N + 1 - l + 1:n - H - l + 2]
            Y = data[n - N + 1:n + 1]
            Xp = regs[n - N + 1 - l + 1:n - l + 2]
            t0 = time.perf_counter()
            fc.update(X, Y)
            fc.predict(Xp)
            dt = (time.perf_counter() - t0) * 1e3
            if k >= warmup:
                times.append(dt)
        times = np.array(times)
        rows.append({"method": method, "hidden": h if is_stochastic(method) else None, "l": l, "window": N,
                     "steps": steps, "median_ms": float(np.median(times)),
                     "p95_ms": float(np.percentile(times, 95)), "mean_ms": float(times.mean()),
                     "std_ms": float(times.std())})
    return rows


def benchmark_csv(rows: list) -> str:
    buf = io.StringIO()
    cols = ["method", "hidden", "l", "window", "steps", "median_ms", "p95_ms", "mean_ms", "std_ms"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([r[c] if not isinstance(r[c], float) else f"{r[c]:.4f}" for c in cols])
    return buf.getvalue()


def second_difference_stats(ms: MarkerSeries) -> dict:
    d2 = np.diff(ms.positions, n=2, axis=0)
    mag = np.sqrt(np.sum(d2 * d2, axis=-1))
    return {"d2_mean": float(mag.mean()), "d2_std": float(mag.std()), "d2_max": float(mag.max())}


def synth(cfg: ExperimentConfig, out: Path) -> list:
    """Write the configured synthetic sequences as CSV; returns summary rows."""
    if not cfg.synthetic:
        raise ConfigError("no synthetic dataset configured")
    only_synth = ExperimentConfig(**{**cfg.__dict__, "csv": [], "outliers": cfg.outliers})
    rows = []
    for seq in build_sequences(only_synth):
        path = out / f"{seq.name}.csv"
        save_csv(seq.observed, path)
        pos = seq.observed.positions
        rows.append({"file": path.name, "label": seq.label, "rows": len(seq.observed),
                     **{f"std_{ax}": float(pos[..., a].std(axis=0).mean()) for a, ax in enumerate("xyz")},
                     **second_difference_stats(seq.observed)})
    return rows


def summary_csv(rows: list) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r.values()])
    return buf.getvalue()


def kernel_surface(sigma: float = 1.0, extent: float = 3.0, points: int = 13) -> str:
    """MSE ``|e|^2`` and correntropy kernel on a cube of pure-quaternion errors."""
    if points < 1 or not extent > 0:
        raise ConfigError("plot grid needs points >= 1 and extent > 0")
    kc = KernelConfig(sigma)
    axis = np.linspace(-extent, extent, points)
    if points % 2 == 1:
        axis[points // 2] = 0.0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["b", "c", "d", "mse", "correntropy"])
    for b, c, d in itertools.product(axis, axis, axis):
        e = np.array([0.0, b, c, d])
        w.writerow([repr(float(b)), repr(float(c)), repr(float(d)), repr(mse_loss(e)),
                    repr(quat_gauss_kernel(e, np.zeros(4), kc))])
    return buf.getvalue()


def heat_tables(grid_csv_text: str) -> dict:
    """Per method, best validation RMSE over (alpha, hidden) with the other parameters minimised out."""
    tables = {}
    for rec in csv.DictReader(io.StringIO(grid_csv_text)):
        key = (rec["alpha"], rec["hidden"] or "-")
        cell = tables.setdefault(rec["method"], {})
        cell[key] = min(cell.get(key, float("inf")), float(rec["val_rmse"]))
    out = {}
    for method, cells in tables.items():
        alphas = sorted({a for a, _ in cells}, key=float)
        hiddens = sorted({h for _, h in cells}, key=lambda h: (h == "-", float(h) if h != "-" else 0))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha \\ hidden"] + hiddens)
        for a in alphas:
            w.writerow([a] + [repr(cells[(a, h)]) if (a, h) in cells else "" for h in hiddens])
        out[method] = buf.getvalue()
    return out


def plotdata(cfg: ExperimentConfig, source: Path, out: Path) -> list:
    """Kernel surface plus plot-ready copies of traces and grid heat tables found under ``source``."""
    written = []
    p = cfg.plot
    (out / "kernel_surface.csv").write_text(kernel_surface(float(p.get("sigma", 1.0)),
                                                          float(p.get("extent", 3.0)), int(p.get("points", 13))))
    written.append("kernel_surface.csv")
    grid = source / "gridsearch" / "grid.csv"
    if grid.exists():
        for method, text in heat_tables(grid.read_text()).items():
            name = f"heat_{method}.csv"
            (out / name).write_text(text)
            written.append(name)
    traces = source / "evaluate" / "traces"
    if traces.is_dir():
        for f in sorted(traces.glob("*.csv")):
            name = f"trace_{f.name}"
            (out / name).write_text(f.read_text())
            written.append(name)
    return written
