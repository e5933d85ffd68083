"""Quaternion recurrent network trained online on sliding windows.

Each layer ``l`` computes

    f_l(n) = U_l h_l(n-1) + W_l v_{l-1}(n) + b_l,    h_l(n) = Phi(f_l(n))

with Hamilton products throughout, ``v_0(n) = x(n)`` and ``v_l = h_l``.
Hidden layers use split tanh and the output layer is linear by default.

Training runs the forward pass over a window of ``N`` steps starting from a
zero hidden state, propagates quaternion error terms backwards through the
window, and applies ``W += alpha * sum_n delta(n) v(n)^H`` style updates.
The error terms are steepest-descent directions of the window loss up to a
positive constant absorbed into the learning rate:

* MSE: ``sum_n e(n)^H e(n)``, error terms seeded with ``e(n)``.
* MCC: ``-(1/N) sum_n kappa(e(n))``, error terms seeded with
  ``exp(-|e(n)|^2 / (2 sigma^2)) e(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .activations import SplitActivation, apply, pseudo_derivative
from .errors import ConfigError, DimensionMismatch, InsufficientHistory, NonFiniteError
from .quaternion import as_quat, left_matrix, outer, sqnorm

__all__ = [
    "LossKind",
    "TrainConfig",
    "LayerParams",
    "QrnnParams",
    "QrnnState",
    "DeltaSet",
    "init_params",
    "forward_step",
    "forward_window",
    "window_errors",
    "window_loss",
    "compute_deltas",
    "compute_deltas_mcc",
    "compute_deltas_mse",
    "raw_updates",
    "clip_updates",
    "apply_updates",
    "train_step",
    "train_online",
    "predict_horizon",
]


class LossKind(str, Enum):
    MCC = "mcc"
    MSE = "mse"


# How hidden-layer updates treat the sum over mu in {1, i, j, k}:
#   "none"    - no involution sum; the gradient-consistent default
#   "plain"   - sum of four unrotated copies of delta
#   "rotated" - sum of the four involutions of delta (equals 4 Re delta)
INVOLUTION_MODES = ("none", "plain", "rotated")

# "window": every step of the window carries its own error (default).
# "final":  only the final step injects e(N); MCC attenuation is computed
#           from |delta_{l+1}(n)|^2 inside the hidden-layer recursion.
RECURSION_MODES = ("window", "final")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one QRNN training run.

    ``layers`` lists quaternion widths from input to output, e.g. ``(3, 10, 3)``.
    ``clip_norm=None`` disables clipping.
    """

    layers: tuple = (3, 10, 3)
    alpha: float = 0.05
    sigma: float = 1.0
    clip_norm: float | None = 1.0
    window_len: int = 10
    loss: LossKind = LossKind.MCC
    activation: SplitActivation = SplitActivation.TANH
    output_activation: SplitActivation = SplitActivation.IDENTITY
    seed: int = 0
    involution: str = "none"
    recursion: str = "window"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(int(a) for a in self.layers))
        object.__setattr__(self, "loss", LossKind(self.loss))
        object.__setattr__(self, "activation", SplitActivation.parse(self.activation))
        object.__setattr__(self, "output_activation", SplitActivation.parse(self.output_activation))
        if len(self.layers) < 2 or min(self.layers) < 1:
            raise ConfigError(f"layers must list at least input and output widths >= 1, got {self.layers}")
        if not self.alpha > 0:
            raise ConfigError("alpha must be > 0")
        if not self.sigma > 0:
            raise ConfigError("sigma must be > 0")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigError("clip_norm must be > 0 or None")
        if int(self.window_len) < 1:
            raise ConfigError("window_len must be >= 1")
        if self.involution not in INVOLUTION_MODES:
            raise ConfigError(f"involution must be one of {INVOLUTION_MODES}")
        if self.recursion not in RECURSION_MODES:
            raise ConfigError(f"recursion must be one of {RECURSION_MODES}")

    def with_(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


@dataclass
class LayerParams:
    W: np.ndarray  # (A_l, A_{l-1}, 4)
    U: np.ndarray  # (A_l, A_l, 4)
    b: np.ndarray  # (A_l, 4)

    def arrays(self):
        return (self.W, self.U, self.b)


@dataclass
class QrnnParams:
    layers: list
    activations: tuple

    @property
    def widths(self) -> tuple:
        return (self.layers[0].W.shape[1],) + tuple(layer.W.shape[0] for layer in self.layers)

    def copy(self) -> "QrnnParams":
        return QrnnParams([LayerParams(*(a.copy() for a in layer.arrays())) for layer in self.layers],
                          self.activations)

    def arrays(self) -> list:
        return [a for layer in self.layers for a in layer.arrays()]

    def named_arrays(self) -> dict:
        out = {}
        for l, layer in enumerate(self.layers, start=1):
            for name, arr in zip("WUb", layer.arrays()):
                out[f"layer.{l}.{name}"] = arr
        return out

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def astype(self, dtype) -> "QrnnParams":
        return QrnnParams([LayerParams(*(a.astype(dtype) for a in layer.arrays())) for layer in self.layers],
                          self.activations)

    def validate(self):
        prev = self.layers[0].W.shape[1]
        for l, layer in enumerate(self.layers, start=1):
            A = layer.W.shape[0]
            if layer.W.shape != (A, prev, 4) or layer.U.shape != (A, A, 4) or layer.b.shape != (A, 4):
                raise DimensionMismatch(f"layer {l} shapes do not chain",
                                        layer.W.shape, layer.U.shape, layer.b.shape)
            prev = A
        if len(self.activations) != len(self.layers):
            raise DimensionMismatch("one activation per layer required",
                                    (len(self.activations),), (len(self.layers),))


def init_params(cfg: TrainConfig, rng=None) -> QrnnParams:
    """Uniform initialisation on ``[-r, r]`` per component, ``r = 1/sqrt(4 fan_in)``; zero biases.

    ``fan_in`` counts the quaternion inputs feeding a neuron (feedforward
    plus recurrent).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    layers = []
    widths = cfg.layers
    for l in range(1, len(widths)):
        A, P = widths[l], widths[l - 1]
        r = 1.0 / math.sqrt(4.0 * (P + A))
        W = rng.uniform(-r, r, size=(A, P, 4))
        U = rng.uniform(-r, r, size=(A, A, 4))
        layers.append(LayerParams(W, U, np.zeros((A, 4))))
    acts = tuple([cfg.activation] * (len(widths) - 2) + [cfg.output_activation])
    return QrnnParams(layers, acts)


@dataclass
class QrnnState:
    """Window history: inputs ``x`` ``(N, A_0, 4)`` and per-layer ``f``/``h`` ``(N, A_l, 4)``."""

    x: np.ndarray
    f: list
    h: list

    @property
    def length(self) -> int:
        return self.x.shape[0]

    @property
    def output(self) -> np.ndarray:
        """Top-layer state at the latest step."""
        return self.h[-1][-1]

    @property
    def outputs(self) -> np.ndarray:
        return self.h[-1]

    @classmethod
    def empty(cls, params: QrnnParams, dtype=float) -> "QrnnState":
        widths = params.widths
        return cls(np.zeros((0, widths[0], 4), dtype=dtype),
                   [np.zeros((0, a, 4), dtype=dtype) for a in widths[1:]],
                   [np.zeros((0, a, 4), dtype=dtype) for a in widths[1:]])


def _mats(params: QrnnParams):
    return [(left_matrix(layer.W), left_matrix(layer.U), layer.b.reshape(-1)) for layer in params.layers]


def _run(params: QrnnParams, mats, h_prev, inputs):
    """Core forward loop on flattened real vectors; returns per-step f, h lists."""
    N = inputs.shape[0]
    L = len(mats)
    fs = [[None] * N for _ in range(L)]
    hs = [[None] * N for _ in range(L)]
    h_prev = list(h_prev)
    for n in range(N):
        v = inputs[n].reshape(-1)
        for l, (Lw, Lu, b) in enumerate(mats):
            f = Lu @ h_prev[l] + Lw @ v + b
            h = apply(params.activations[l], f.reshape(-1, 4)).reshape(-1)
            fs[l][n] = f
            hs[l][n] = h
            h_prev[l] = h
            v = h
    return fs, hs


def forward_step(params: QrnnParams, prev_state: QrnnState | None, x) -> QrnnState:
    """Advance the network one step; returns the state with history extended by one."""
    params.validate()
    if prev_state is None:
        prev_state = QrnnState.empty(params)
    x = as_quat(x)
    widths = params.widths
    if x.shape != (widths[0], 4):
        raise DimensionMismatch("input width does not match the input layer", x.shape, (widths[0], 4))
    if prev_state.length and tuple(h.shape[1] for h in prev_state.h) != widths[1:]:
        raise DimensionMismatch("state does not match params",
                                tuple(h.shape[1] for h in prev_state.h), widths[1:])
    dtype = np.result_type(x, *params.arrays())
    h_prev = [h[-1].reshape(-1) if prev_state.length else np.zeros(4 * a, dtype=dtype)
              for h, a in zip(prev_state.h, widths[1:])]
    fs, hs = _run(params, _mats(params), h_prev, x[None])
    return QrnnState(
        np.concatenate([prev_state.x, x[None]]),
        [np.concatenate([old, f[0].reshape(1, -1, 4)]) for old, f in zip(prev_state.f, fs)],
        [np.concatenate([old, h[0].reshape(1, -1, 4)]) for old, h in zip(prev_state.h, hs)],
    )


def forward_window(params: QrnnParams, inputs, init_state: QrnnState | None = None, mats=None) -> QrnnState:
    """Run the forward pass over ``inputs`` ``(N, A_0, 4)`` from ``init_state`` (zeros if None).

    The returned state holds the history of this window only.
    """
    inputs = as_quat(inputs)
    widths = params.widths
    if inputs.ndim != 3 or inputs.shape[1:] != (widths[0], 4):
        raise DimensionMismatch("window inputs must be (N, A_0, 4)", inputs.shape, (widths[0], 4))
    if inputs.shape[0] == 0:
        raise InsufficientHistory("forward_window needs a nonempty input sequence")
    dtype = np.result_type(inputs, *params.arrays())
    if init_state is not None and init_state.length:
        h_prev = [h[-1].reshape(-1) for h in init_state.h]
    else:
        h_prev = [np.zeros(4 * a, dtype=dtype) for a in widths[1:]]
    fs, hs = _run(params, mats if mats is not None else _mats(params), h_prev, inputs)
    N = inputs.shape[0]
    return QrnnState(
        inputs.copy(),
        [np.stack(f).reshape(N, -1, 4) for f in fs],
        [np.stack(h).reshape(N, -1, 4) for h in hs],
    )


def window_errors(state: QrnnState, targets) -> np.ndarray:
    targets = as_quat(targets)
    if targets.shape != state.outputs.shape:
        raise DimensionMismatch("targets must match the output history", targets.shape, state.outputs.shape)
    return targets - state.outputs


def window_loss(params: QrnnParams, inputs, targets, cfg: TrainConfig):
    """Scalar loss whose steepest-descent direction the error terms follow."""
    state = forward_window(params, inputs)
    e = window_errors(state, targets)
    if cfg.recursion == "final":
        e = e[-1:]
    if cfg.loss is LossKind.MSE:
        return np.sum(e * e)
    # kept in numpy arithmetic so extended-precision evaluation stays exact
    s2 = 2.0 * cfg.sigma * cfg.sigma
    n2 = sqnorm(e).reshape(e.shape[0], -1).sum(axis=1)
    peak = 4.0 / (math.sqrt(2.0 * math.pi) * cfg.sigma)
    return -peak * np.mean(np.exp(-n2 / s2))


@dataclass
class DeltaSet:
    """Quaternion error terms ``delta[l]`` of shape ``(N, A_l, 4)`` plus per-step MCC weights."""

    deltas: list
    errors: np.ndarray
    weights: np.ndarray = field(default=None)


def compute_deltas(params: QrnnParams, state: QrnnState, targets, cfg: TrainConfig, mats=None) -> DeltaSet:
    """Backward recursion of the error terms through layers and window steps."""
    e = window_errors(state, targets)
    N = state.length
    L = len(params.layers)
    if mats is None:
        mats = _mats(params)
    s2 = 2.0 * cfg.sigma * cfg.sigma
    mcc = cfg.loss is LossKind.MCC
    step_n2 = sqnorm(e).reshape(N, -1).sum(axis=1)
    weights = np.exp(-step_n2 / s2) if mcc else np.ones(N, dtype=e.dtype)

    dphi = [pseudo_derivative(params.activations[l], state.f[l]).reshape(N, -1) for l in range(L)]
    eflat = e.reshape(N, -1)
    deltas = [np.zeros_like(d) for d in dphi]
    final_only = cfg.recursion == "final"
    for n in range(N - 1, -1, -1):
        for l in range(L - 1, -1, -1):
            if l == L - 1:
                if final_only:
                    if n == N - 1:
                        # top case: the raw output error, no derivative factor
                        deltas[l][n] = eflat[n]
                        continue
                    s = 0.0
                else:
                    s = weights[n] * eflat[n]
            else:
                s = mats[l + 1][0].T @ deltas[l + 1][n]
            if n < N - 1:
                s = s + mats[l][1].T @ deltas[l][n + 1]
            if final_only and mcc and l < L - 1:
                s = s * np.exp(-np.sum(deltas[l + 1][n] ** 2) / s2)
            deltas[l][n] = dphi[l][n] * s
    return DeltaSet([d.reshape(N, -1, 4) for d in deltas], e, weights)


def compute_deltas_mcc(params, state, targets, cfg: TrainConfig, mats=None) -> DeltaSet:
    if cfg.loss is not LossKind.MCC:
        raise ConfigError("compute_deltas_mcc requires loss=MCC")
    return compute_deltas(params, state, targets, cfg, mats)


def compute_deltas_mse(params, state, targets, cfg: TrainConfig, mats=None) -> DeltaSet:
    if cfg.loss is not LossKind.MSE:
        raise ConfigError("compute_deltas_mse requires loss=MSE")
    return compute_deltas(params, state, targets, cfg, mats)


def _hidden_delta(d: np.ndarray, mode: str) -> np.ndarray:
    if mode == "plain":
        return 4.0 * d
    if mode == "rotated":
        out = np.zeros_like(d)
        out[..., 0] = 4.0 * d[..., 0]
        return out
    return d


def raw_updates(params: QrnnParams, deltas: DeltaSet, state: QrnnState, cfg: TrainConfig) -> list:
    """Unscaled, unclipped updates ``[(dW, dU, db), ...]`` per layer."""
    L = len(params.layers)
    if len(deltas.deltas) != L or deltas.deltas[0].shape[0] != state.length:
        raise DimensionMismatch("deltas do not match the state",
                                (len(deltas.deltas), deltas.deltas[0].shape[0]), (L, state.length))
    out = []
    for l in range(L):
        d = deltas.deltas[l]
        if l < L - 1:
            d = _hidden_delta(d, cfg.involution)
        v = state.x if l == 0 else state.h[l - 1]
        dW = outer(d, v)
        if state.length > 1:
            dU = outer(d[1:], state.h[l][:-1])
        else:
            dU = np.zeros_like(params.layers[l].U)
        db = d.sum(axis=0)
        out.append((dW, dU, db))
    return out


def _norm(updates) -> float:
    return math.sqrt(sum(float(np.sum(a * a)) for triple in updates for a in triple))


def clip_updates(updates, clip_norm):
    """Rescale the stacked update to global norm ``clip_norm`` when it exceeds it."""
    if clip_norm is None:
        return updates
    norm = _norm(updates)
    if norm <= clip_norm or norm == 0.0:
        return updates
    scale = clip_norm / norm
    return [tuple(a * scale for a in triple) for triple in updates]


def apply_updates(params: QrnnParams, deltas: DeltaSet, state: QrnnState, cfg: TrainConfig) -> QrnnParams:
    """Return new params after one scaled, clipped update."""
    steps = [tuple(cfg.alpha * a for a in triple) for triple in raw_updates(params, deltas, state, cfg)]
    steps = clip_updates(steps, cfg.clip_norm)
    layers = [LayerParams(layer.W + dW, layer.U + dU, layer.b + db)
              for layer, (dW, dU, db) in zip(params.layers, steps)]
    return QrnnParams(layers, params.activations)


def train_step(params: QrnnParams, inputs, targets, cfg: TrainConfig):
    """One window update; returns ``(new_params, state_before_update)``."""
    mats = _mats(params)
    state = forward_window(params, inputs, mats=mats)
    deltas = compute_deltas(params, state, targets, cfg, mats)
    return apply_updates(params, deltas, state, cfg), state


def train_online(params: QrnnParams, stream, cfg: TrainConfig):
    """Train on a stream of ``(input, target)`` pairs, one update per new sample.

    At sample ``k`` the window covers pairs ``max(0, k-N+1) .. k``. The
    emitted prediction for sample ``k`` is the network output before the
    update at ``k`` (a-priori). Returns ``(params, predictions)`` with
    predictions of shape ``(T, A_L, 4)``.
    """
    if isinstance(stream, tuple) and len(stream) == 2 and np.ndim(stream[0]) == 3:
        inputs, targets = (as_quat(s) for s in stream)
    else:
        pairs = list(stream)
        if not pairs:
            raise InsufficientHistory("train_online needs a nonempty stream")
        inputs = np.stack([as_quat(p[0]) for p in pairs])
        targets = np.stack([as_quat(p[1]) for p in pairs])
    T = inputs.shape[0]
    if T == 0:
        raise InsufficientHistory("train_online needs a nonempty stream")
    N = cfg.window_len
    preds = np.zeros((T,) + targets.shape[1:])
    for k in range(T):
        lo = max(0, k - N + 1)
        params, state = train_step(params, inputs[lo:k + 1], targets[lo:k + 1], cfg)
        preds[k] = state.output
        if not params.is_finite():
            raise NonFiniteError(k)
    return params, preds


def predict_horizon(params: QrnnParams, history, H: int, regressor_len: int, window_len: int | None = None
                    ) -> np.ndarray:
    """Direct ``H``-step-ahead estimate from the tail of ``history`` ``(T, M, 4)``.

    The network input at each step is the flattened regressor of the last
    ``regressor_len`` samples; the forward pass runs over the last
    ``window_len`` regressors (as many as the history allows when None).
    The network must have been trained with targets shifted by ``H``; the
    horizon is not rolled out iteratively.
    """
    history = as_quat(history)
    if H < 0:
        raise ConfigError("horizon must be >= 0")
    T = history.shape[0]
    if T < regressor_len:
        raise InsufficientHistory(f"need {regressor_len} samples of history, got {T}")
    available = T - regressor_len + 1
    N = available if window_len is None else min(window_len, available)
    regs = np.stack([history[n - regressor_len + 1:n + 1].reshape(-1, 4) for n in range(T - N, T)])
    return forward_window(params, regs).output
