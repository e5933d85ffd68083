"""Comparison methods: real-valued RNN trained like the QRNN, QLMS and LMS.

The real RNN sees the three markers as nine real channels and follows the
same sliding-window protocol as :mod:`quatrnn.qrnn`. Its MCC loss applies the
real Gaussian kernel to every output channel separately, so each channel's
error is attenuated by its own weight ``exp(-e_c^2 / (2 sigma^2))``.

QLMS uses the filter output ``y = w^H x`` and the update
``w <- w + eta * x e*`` (the steepest-descent direction of ``|e|^2`` w.r.t.
the conjugate weights). With real-valued data it reduces exactly to LMS:
``y = w^T x``, ``w <- w + eta * e x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DimensionMismatch, InsufficientHistory, NonFiniteError
from .qrnn import LossKind, clip_updates
from .quaternion import as_quat, conj, qmul

__all__ = [
    "RealRnnConfig",
    "RealRnnParams",
    "RealRnnState",
    "init_rnn_params",
    "rnn_forward",
    "rnn_window_loss",
    "rnn_deltas",
    "rnn_raw_updates",
    "rnn_apply_updates",
    "rnn_train_step",
    "rnn_train_online",
    "LmsFilter",
    "lms_step",
    "qlms_step",
    "quat_to_channels",
    "channels_to_quat",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class RealRnnConfig:
    layers: tuple = (9, 20, 9)
    alpha: float = 0.05
    sigma: float = 1.0
    clip_norm: float | None = 1.0
    window_len: int = 10
    loss: LossKind = LossKind.MSE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(int(a) for a in self.layers))
        object.__setattr__(self, "loss", LossKind(self.loss))
        if len(self.layers) < 2 or min(self.layers) < 1:
            raise ConfigError(f"invalid layer widths {self.layers}")
        if not (self.alpha > 0 and self.sigma > 0) or int(self.window_len) < 1:
            raise ConfigError("alpha, sigma must be > 0 and window_len >= 1")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigError("clip_norm must be > 0 or None")

    def with_(self, **kw) -> "RealRnnConfig":
        return replace(self, **kw)


@dataclass
class RealRnnParams:
    W: list
    U: list
    b: list

    def arrays(self) -> list:
        return [a for triple in zip(self.W, self.U, self.b) for a in triple]

    def named_arrays(self) -> dict:
        out = {}
        for l, triple in enumerate(zip(self.W, self.U, self.b), start=1):
            for name, arr in zip("WUb", triple):
                out[f"layer.{l}.{name}"] = arr
        return out

    def astype(self, dtype) -> "RealRnnParams":
        return RealRnnParams([w.astype(dtype) for w in self.W], [u.astype(dtype) for u in self.U],
                             [b.astype(dtype) for b in self.b])

    def copy(self) -> "RealRnnParams":
        return RealRnnParams([w.copy() for w in self.W], [u.copy() for u in self.U], [b.copy() for b in self.b])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    @property
    def widths(self) -> tuple:
        return (self.W[0].shape[1],) + tuple(w.shape[0] for w in self.W)


def init_rnn_params(cfg: RealRnnConfig, rng=None) -> RealRnnParams:
    """Uniform on ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, zero biases."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    W, U, b = [], [], []
    for l in range(1, len(cfg.layers)):
        A, P = cfg.layers[l], cfg.layers[l - 1]
        r = 1.0 / math.sqrt(P + A)
        W.append(rng.uniform(-r, r, size=(A, P)))
        U.append(rng.uniform(-r, r, size=(A, A)))
        b.append(np.zeros(A))
    return RealRnnParams(W, U, b)


@dataclass
class RealRnnState:
    x: np.ndarray
    f: list
    h: list

    @property
    def length(self) -> int:
        return self.x.shape[0]

    @property
    def output(self) -> np.ndarray:
        return self.h[-1][-1]


def rnn_forward(params: RealRnnParams, inputs) -> RealRnnState:
    """Forward pass over a window from a zero state; tanh hidden layers, linear output."""
    inputs = np.asarray(inputs)
    if inputs.dtype.kind != "f":
        inputs = inputs.astype(float)
    widths = params.widths
    if inputs.ndim != 2 or inputs.shape[1] != widths[0]:
        raise DimensionMismatch("window inputs must be (N, A_0)", inputs.shape, (widths[0],))
    N = inputs.shape[0]
    L = len(params.W)
    dtype = np.result_type(inputs, *params.arrays())
    fs = [np.zeros((N, a), dtype=dtype) for a in widths[1:]]
    hs = [np.zeros((N, a), dtype=dtype) for a in widths[1:]]
    for n in range(N):
        v = inputs[n]
        for l in range(L):
            f = params.W[l] @ v + params.b[l]
            if n:
                f = f + params.U[l] @ hs[l][n - 1]
            fs[l][n] = f
            hs[l][n] = np.tanh(f) if l < L - 1 else f
            v = hs[l][n]
    return RealRnnState(inputs.copy(), fs, hs)


def rnn_window_loss(params: RealRnnParams, inputs, targets, cfg: RealRnnConfig):
    """Window loss in the dtype of the inputs: ``sum e^2`` or the channel-summed real MCC loss."""
    e = np.asarray(targets) - rnn_forward(params, inputs).h[-1]
    if cfg.loss is LossKind.MSE:
        return np.sum(e * e)
    s = cfg.sigma
    k = np.exp(-(e * e) / (2 * s * s)) / (_SQRT_2PI * s)
    return -k.sum(axis=1).mean()


def rnn_deltas(params: RealRnnParams, state: RealRnnState, targets, cfg: RealRnnConfig) -> list:
    targets = np.asarray(targets, dtype=float)
    out = state.h[-1]
    if targets.shape != out.shape:
        raise DimensionMismatch("targets must match outputs", targets.shape, out.shape)
    e = targets - out
    if cfg.loss is LossKind.MCC:
        e = e * np.exp(-(e * e) / (2 * cfg.sigma ** 2))
    N = state.length
    L = len(params.W)
    deltas = [np.zeros_like(h) for h in state.h]
    for n in range(N - 1, -1, -1):
        for l in range(L - 1, -1, -1):
            s = e[n] if l == L - 1 else params.W[l + 1].T @ deltas[l + 1][n]
            if n < N - 1:
                s = s + params.U[l].T @ deltas[l][n + 1]
            if l < L - 1:
                s = s * (1.0 - np.tanh(state.f[l][n]) ** 2)
            deltas[l][n] = s
    return deltas


def rnn_raw_updates(params: RealRnnParams, deltas, state: RealRnnState) -> list:
    out = []
    for l, d in enumerate(deltas):
        v = state.x if l == 0 else state.h[l - 1]
        dW = d.T @ v
        dU = d[1:].T @ state.h[l][:-1] if state.length > 1 else np.zeros_like(params.U[l])
        out.append((dW, dU, d.sum(axis=0)))
    return out


def rnn_apply_updates(params: RealRnnParams, deltas, state, cfg: RealRnnConfig) -> RealRnnParams:
    steps = [tuple(cfg.alpha * a for a in t) for t in rnn_raw_updates(params, deltas, state)]
    steps = clip_updates(steps, cfg.clip_norm)
    return RealRnnParams([w + s[0] for w, s in zip(params.W, steps)],
                         [u + s[1] for u, s in zip(params.U, steps)],
                         [b + s[2] for b, s in zip(params.b, steps)])


def rnn_train_step(params: RealRnnParams, inputs, targets, cfg: RealRnnConfig):
    state = rnn_forward(params, inputs)
    deltas = rnn_deltas(params, state, targets, cfg)
    return rnn_apply_updates(params, deltas, state, cfg), state


def rnn_train_online(params: RealRnnParams, stream, cfg: RealRnnConfig):
    """Same protocol as :func:`quatrnn.qrnn.train_online` on real ``(T, C)`` arrays."""
    inputs, targets = (np.asarray(s, dtype=float) for s in stream)
    T = inputs.shape[0]
    if T == 0:
        raise InsufficientHistory("rnn_train_online needs a nonempty stream")
    preds = np.zeros_like(targets)
    N = cfg.window_len
    for k in range(T):
        lo = max(0, k - N + 1)
        params, state = rnn_train_step(params, inputs[lo:k + 1], targets[lo:k + 1], cfg)
        preds[k] = state.output
        if not params.is_finite():
            raise NonFiniteError(k)
    return params, preds


@dataclass(frozen=True)
class LmsFilter:
    """Adaptive transversal filter; quaternion taps when ``weights`` is ``(l, 4)``."""

    weights: np.ndarray
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError("step size eta must be > 0")

    @property
    def is_quaternion(self) -> bool:
        return self.weights.ndim == 2 and self.weights.shape[-1] == 4

    @classmethod
    def zeros(cls, length: int, eta: float, quaternion: bool = False) -> "LmsFilter":
        return cls(np.zeros((length, 4) if quaternion else length), eta)


def lms_step(filt: LmsFilter, x, d):
    """Real LMS: ``y = w^T x``, ``w <- w + eta e x``. Returns ``(y, new_filter)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != filt.weights.shape:
        raise DimensionMismatch("regressor length differs from filter length", x.shape, filt.weights.shape)
    y = float(filt.weights @ x)
    e = float(d) - y
    if e == 0.0:
        return y, filt
    return y, LmsFilter(filt.weights + filt.eta * e * x, filt.eta)


def qlms_step(filt: LmsFilter, x, d):
    """QLMS: ``y = sum_m w_m* x_m``, ``w <- w + eta x e*``. Returns ``(y, new_filter)``."""
    x = as_quat(x)
    if x.shape != filt.weights.shape:
        raise DimensionMismatch("regressor length differs from filter length", x.shape, filt.weights.shape)
    y = qmul(conj(filt.weights), x).sum(axis=0)
    e = as_quat(d) - y
    if not np.any(e):
        return y, filt
    return y, LmsFilter(filt.weights + filt.eta * qmul(x, conj(e)[None, :]), filt.eta)


def quat_to_channels(q) -> np.ndarray:
    """Pure-quaternion markers ``(..., M, 4)`` to real channels ``(..., 3M)``."""
    q = as_quat(q)
    return q[..., 1:].reshape(q.shape[:-2] + (-1,))


def channels_to_quat(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    xyz = c.reshape(c.shape[:-1] + (-1, 3))
    out = np.zeros(xyz.shape[:-1] + (4,))
    out[..., 1:] = xyz
    return out
