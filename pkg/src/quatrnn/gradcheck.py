"""Finite-difference oracle for the hand-derived update rules.

The analytic side of a check is the raw update produced by the model's
error-term recursion (learning rate 1, no clipping). The numeric side is the
negative gradient of the model's window loss by central differences over every
real component of every parameter. The two are compared after fitting one
global scalar, so a constant absorbed into the learning rate cannot hide a
sign or structure error: after rescaling, every component must agree to the
stated relative tolerance.

The reported ``scale`` is expressed relative to the ``e^H e`` convention,
where the negative gradient equals twice the raw update. It is 1 for the
MSE loss and ``2 / (N sqrt(2 pi) sigma^3)`` for the quaternion MCC loss.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, NonFiniteLoss
from .quaternion import Involution, as_quat, rotate

__all__ = [
    "relative_error",
    "numeric_partials",
    "ghr_numeric",
    "GradCheckEntry",
    "GradCheckReport",
    "compare_gradients",
    "check_model_gradients",
]

EPS = 1e-12


def relative_error(a, n, eps: float = EPS) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    n = np.asarray(n, dtype=float)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), eps)


def numeric_partials(loss: Callable, params, step: float = 1e-6):
    """Central-difference partials of ``loss(params)`` w.r.t. every array element.

    ``params`` is a single array or a list of arrays; it is perturbed in place
    and restored. Returns partials with the same structure.
    """
    if step <= 0:
        raise ConfigError("step must be > 0")
    single = isinstance(params, np.ndarray)
    arrays = [params] if single else list(params)
    grads = []
    counter = 0
    for arr in arrays:
        g = np.zeros(arr.shape, dtype=np.result_type(arr, float))
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        if not np.shares_memory(flat, arr):
            raise ValueError("parameter arrays must be contiguous")
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = loss(params)
            flat[i] = orig - step
            lm = loss(params)
            flat[i] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise NonFiniteLoss(counter)
            gflat[i] = (lp - lm) / (2 * step)
            counter += 1
        grads.append(g)
    return grads[0] if single else grads


def ghr_numeric(loss: Callable, q, mu="1", step: float = 1e-6) -> np.ndarray:
    """Numeric left GHR derivative of a real function of one quaternion.

    Assembles ``(1/4)(f_a - f_b i^mu - f_c j^mu - f_d k^mu)`` from central
    differences of the four real partials.
    """
    q = np.array(as_quat(q), dtype=float)
    if q.shape != (4,):
        raise ValueError("ghr_numeric expects a single quaternion")
    p = numeric_partials(lambda x: float(loss(x)), q, step)
    units = [Involution.I.unit, Involution.J.unit, Involution.K.unit]
    out = np.array([p[0], 0.0, 0.0, 0.0])
    for partial, u in zip(p[1:], units):
        out = out - partial * rotate(u, mu)
    return out / 4.0


@dataclass
class GradCheckEntry:
    case: int
    name: str
    index: tuple
    analytic: float
    numeric: float
    abs_error: float
    rel_error: float


@dataclass
class GradCheckReport:
    entries: list = field(default_factory=list)
    scales: list = field(default_factory=list)
    cosines: list = field(default_factory=list)
    tolerance: float = 1e-5

    @property
    def max_rel_error(self) -> float:
        return max((e.rel_error for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    @property
    def scale(self) -> float:
        finite = [s for s in self.scales if math.isfinite(s)]
        return float(np.mean(finite)) if finite else float("nan")

    def worst(self, k: int = 5) -> list:
        return sorted(self.entries, key=lambda e: -e.rel_error)[:k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case", "param", "index", "analytic", "numeric", "abs_error", "rel_error"])
        for e in self.entries:
            w.writerow([e.case, e.name, "/".join(map(str, e.index)), repr(e.analytic), repr(e.numeric),
                        repr(e.abs_error), repr(e.rel_error)])
        return buf.getvalue()

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"gradcheck {status}: {len(self.entries)} components over {len(self.scales)} case(s), "
                f"max rel error {self.max_rel_error:.3e} (tol {self.tolerance:g}), scale {self.scale:.6g}")

    def merge(self, other: "GradCheckReport") -> "GradCheckReport":
        offset = len(self.scales)
        for e in other.entries:
            self.entries.append(GradCheckEntry(e.case + offset, e.name, e.index, e.analytic, e.numeric,
                                               e.abs_error, e.rel_error))
        self.scales.extend(other.scales)
        self.cosines.extend(other.cosines)
        return self


def compare_gradients(analytic: dict, numeric: dict, tolerance: float = 1e-5, case: int = 0,
                      convention: float = 2.0) -> GradCheckReport:
    """Scale-normalised comparison of analytic updates with numeric negative gradients.

    Both arguments map parameter names to equally shaped arrays. The best-fit
    scalar ``s`` minimises ``|numeric - s * analytic|``; the report stores
    ``s / convention`` as the case scale.
    """
    names = list(analytic)
    a = np.concatenate([np.asarray(analytic[k], dtype=float).reshape(-1) for k in names])
    n = np.concatenate([np.asarray(numeric[k], dtype=float).reshape(-1) for k in names])
    aa = float(a @ a)
    nn = float(n @ n)
    if aa == 0.0 and nn == 0.0:
        s, cos = float("nan"), 1.0
        fitted = a
    elif aa == 0.0:
        s, cos = float("nan"), 0.0
        fitted = a
    else:
        s = float(a @ n) / aa
        cos = float(a @ n) / math.sqrt(aa * nn) if nn > 0 else 0.0
        fitted = s * a
    report = GradCheckReport(tolerance=tolerance)
    report.scales.append(s / convention)
    report.cosines.append(cos)
    pos = 0
    for k in names:
        shape = np.shape(analytic[k])
        size = int(np.prod(shape))
        for i in range(size):
            fa = float(fitted[pos + i])
            fn = float(n[pos + i])
            report.entries.append(GradCheckEntry(case, k, np.unravel_index(i, shape), fa, fn, abs(fa - fn),
                                                 float(relative_error(fa, fn))))
        pos += size
    return report


def _qrnn_case(layers, window, seed, loss, sigma, involution, recursion, activation, output_activation,
               zero=False):
    from .qrnn import (LayerParams, QrnnParams, TrainConfig, compute_deltas, forward_window, raw_updates)

    cfg = TrainConfig(layers=layers, sigma=sigma, clip_norm=None, window_len=window, loss=loss,
                      activation=activation, output_activation=output_activation, involution=involution,
                      recursion=recursion, alpha=1.0)
    rng = np.random.default_rng(seed)
    acts = tuple([cfg.activation] * (len(layers) - 2) + [cfg.output_activation])
    lps = []
    for l in range(1, len(layers)):
        A, P = layers[l], layers[l - 1]
        shapes = [(A, P, 4), (A, A, 4), (A, 4)]
        arrs = [np.zeros(s) if zero else rng.uniform(-0.5, 0.5, size=s) for s in shapes]
        lps.append(LayerParams(*arrs))
    params = QrnnParams(lps, acts)
    inputs = rng.normal(size=(window, layers[0], 4))
    targets = np.zeros((window, layers[-1], 4)) if zero else rng.normal(size=(window, layers[-1], 4))
    state = forward_window(params, inputs)
    deltas = compute_deltas(params, state, targets, cfg)
    ups = raw_updates(params, deltas, state, cfg)
    analytic = {}
    for l, triple in enumerate(ups, start=1):
        for name, arr in zip("WUb", triple):
            analytic[f"layer.{l}.{name}"] = arr
    return cfg, params, inputs, targets, analytic


def _rnn_case(layers, window, seed, loss, sigma, zero=False):
    from .baselines import RealRnnConfig, RealRnnParams, rnn_deltas, rnn_forward, rnn_raw_updates

    cfg = RealRnnConfig(layers=layers, sigma=sigma, clip_norm=None, window_len=window, loss=loss, alpha=1.0)
    rng = np.random.default_rng(seed)
    Ws, Us, bs = [], [], []
    for l in range(1, len(layers)):
        A, P = layers[l], layers[l - 1]
        for store, shape in ((Ws, (A, P)), (Us, (A, A)), (bs, (A,))):
            store.append(np.zeros(shape) if zero else rng.uniform(-0.5, 0.5, size=shape))
    params = RealRnnParams(Ws, Us, bs)
    inputs = rng.normal(size=(window, layers[0]))
    targets = np.zeros((window, layers[-1])) if zero else rng.normal(size=(window, layers[-1]))
    state = rnn_forward(params, inputs)
    deltas = rnn_deltas(params, state, targets, cfg)
    ups = rnn_raw_updates(params, deltas, state)
    analytic = {}
    for l, triple in enumerate(ups, start=1):
        for name, arr in zip("WUb", triple):
            analytic[f"layer.{l}.{name}"] = arr
    return cfg, params, inputs, targets, analytic


def check_model_gradients(model: str = "qrnn", loss: str = "mse", sizes: Sequence[int] = (2, 3, 1),
                          seeds: int | Iterable[int] = 0, tolerance: float = 1e-5, window: int = 3,
                          sigma: float = 0.8, step: float = 1e-6, involution: str = "none",
                          recursion: str = "window", activation: str = "tanh",
                          output_activation: str = "identity", zero: bool = False,
                          dtype=np.longdouble) -> GradCheckReport:
    """Run the analytic pipeline against finite differences of the model's window loss.

    ``model`` is ``"qrnn"`` or ``"rnn"``; ``sizes`` lists layer widths from
    input to output. With several seeds the per-seed reports are merged.

    The numeric side evaluates the loss in ``dtype`` (extended precision by
    default) so rounding in the loss stays well below the central-difference
    truncation error; the analytic side always runs in double precision.
    """
    if isinstance(seeds, (int, np.integer)):
        seeds = [int(seeds)]
    report = GradCheckReport(tolerance=tolerance)
    for seed in seeds:
        if model == "qrnn":
            from .qrnn import window_loss

            cfg, params, inputs, targets, analytic = _qrnn_case(
                tuple(sizes), window, seed, loss, sigma, involution, recursion, activation,
                output_activation, zero)
            params = params.astype(dtype)
            inputs, targets = inputs.astype(dtype), targets.astype(dtype)
            named = params.named_arrays()

            def fn(_, params=params, inputs=inputs, targets=targets, cfg=cfg):
                return window_loss(params, inputs, targets, cfg)
        elif model == "rnn":
            from .baselines import rnn_window_loss

            cfg, params, inputs, targets, analytic = _rnn_case(tuple(sizes), window, seed, loss, sigma, zero)
            params = params.astype(dtype)
            inputs, targets = inputs.astype(dtype), targets.astype(dtype)
            named = params.named_arrays()

            def fn(_, params=params, inputs=inputs, targets=targets, cfg=cfg):
                return rnn_window_loss(params, inputs, targets, cfg)
        else:
            raise ConfigError(f"unknown model kind {model!r}")
        arrays = [named[k] for k in analytic]
        grads = numeric_partials(fn, arrays, step)
        numeric = {k: -g for k, g in zip(analytic, grads)}
        report.merge(compare_gradients(analytic, numeric, tolerance))
    return report
