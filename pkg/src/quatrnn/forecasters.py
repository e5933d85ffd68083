"""Online multi-marker forecasters sharing one regressor-window interface.

At every step a forecaster sees a short sequence of regressors ``X`` of shape
``(N, l, M, 4)``: each regressor holds the last ``l`` pure-quaternion samples
of ``M`` markers. ``update(X, Y)`` adapts to targets ``Y`` ``(N, M, 4)`` (the
samples ``H`` steps after each regressor) and ``predict(X)`` returns the
``(M, 4)`` estimate ``H`` steps after the last regressor.

Networks consume the whole sequence (``window`` regressors, recurrent state
reset at the start); the linear filters only use the latest regressor.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .baselines import (LmsFilter, RealRnnConfig, channels_to_quat, init_rnn_params, lms_step, qlms_step,
                        quat_to_channels, rnn_forward, rnn_train_step)
from .errors import ConfigError, NonFiniteError
from .qrnn import LossKind, TrainConfig, forward_window, init_params, train_step
from .quaternion import as_quat, conj, qmul

__all__ = ["METHODS", "HyperParams", "QrnnForecaster", "RnnForecaster", "LmsForecaster", "QlmsForecaster",
           "make_forecaster", "is_stochastic"]

METHODS = ("qrnn-mcc", "qrnn-mse", "rnn-mcc", "rnn-mse", "qlms", "lms")


@dataclass(frozen=True)
class HyperParams:
    """``alpha`` is the learning rate (eta for the LMS family); ``window=None`` means ``window = l``."""

    alpha: float = 0.001
    hidden: int = 10
    l: int = 20
    sigma: float = 1.0
    window: int | None = None
    clip_norm: float | None = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("learning rate must be > 0")
        if self.hidden < 1 or self.l < 1:
            raise ConfigError("hidden units and regressor length must be >= 1")
        if not self.sigma > 0:
            raise ConfigError("sigma must be > 0")
        if self.window is not None and self.window < 1:
            raise ConfigError("window must be >= 1")

    @property
    def window_len(self) -> int:
        return self.l if self.window is None else self.window

    def as_dict(self) -> dict:
        return asdict(self)

    def with_(self, **kw) -> "HyperParams":
        return replace(self, **kw)


def _finite(arrays, step):
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NonFiniteError(step)


class QrnnForecaster:
    """QRNN whose input at each window step is the flattened ``l x M`` regressor."""

    kind = "qrnn"

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.params = init_params(cfg)
        self.window = cfg.window_len
        self.steps = 0

    def update(self, X, Y):
        X = as_quat(X)
        self.params, _ = train_step(self.params, X.reshape(X.shape[0], -1, 4), as_quat(Y), self.cfg)
        self.steps += 1
        _finite(self.params.arrays(), self.steps)

    def predict(self, X) -> np.ndarray:
        X = as_quat(X)
        return forward_window(self.params, X.reshape(X.shape[0], -1, 4)).output


class RnnForecaster:
    """Real RNN on the ``3 l M`` regressor channels predicting ``3 M`` channels at once."""

    kind = "rnn"

    def __init__(self, cfg: RealRnnConfig):
        self.cfg = cfg
        self.params = init_rnn_params(cfg)
        self.window = cfg.window_len
        self.steps = 0

    @staticmethod
    def _flat(X):
        X = as_quat(X)
        return X[..., 1:].reshape(X.shape[0], -1)

    def update(self, X, Y):
        self.params, _ = rnn_train_step(self.params, self._flat(X), quat_to_channels(Y), self.cfg)
        self.steps += 1
        _finite(self.params.arrays(), self.steps)

    def predict(self, X) -> np.ndarray:
        return channels_to_quat(rnn_forward(self.params, self._flat(X)).output)


class LmsForecaster:
    """One real LMS filter per position channel over that channel's last ``l`` samples."""

    kind = "lms"
    window = 1

    def __init__(self, n_markers: int, length: int, eta: float):
        self.filters = [LmsFilter.zeros(length, eta) for _ in range(3 * n_markers)]
        self.steps = 0

    def update(self, X, Y):
        x = quat_to_channels(as_quat(X)[-1])  # (l, 3M)
        d = quat_to_channels(as_quat(Y)[-1])
        self.filters = [lms_step(f, x[:, c], d[c])[1] for c, f in enumerate(self.filters)]
        self.steps += 1
        _finite([f.weights for f in self.filters], self.steps)

    def predict(self, X) -> np.ndarray:
        x = quat_to_channels(as_quat(X)[-1])
        return channels_to_quat(np.array([f.weights @ x[:, c] for c, f in enumerate(self.filters)]))


class QlmsForecaster:
    """One QLMS filter per marker over that marker's last ``l`` pure-quaternion samples."""

    kind = "qlms"
    window = 1

    def __init__(self, n_markers: int, length: int, eta: float):
        self.filters = [LmsFilter.zeros(length, eta, quaternion=True) for _ in range(n_markers)]
        self.steps = 0

    def update(self, X, Y):
        x = as_quat(X)[-1]  # (l, M, 4)
        d = as_quat(Y)[-1]
        self.filters = [qlms_step(f, x[:, m], d[m])[1] for m, f in enumerate(self.filters)]
        self.steps += 1
        _finite([f.weights for f in self.filters], self.steps)

    def predict(self, X) -> np.ndarray:
        x = as_quat(X)[-1]
        return np.stack([qmul(conj(f.weights), x[:, m]).sum(axis=0) for m, f in enumerate(self.filters)])


def is_stochastic(method: str) -> bool:
    """Only the networks depend on the seed (random initial weights)."""
    return method.startswith(("qrnn", "rnn"))


def make_forecaster(method: str, hp: HyperParams, seed: int = 0, n_markers: int = 3):
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method.startswith("qrnn"):
        loss = LossKind(method.split("-")[1])
        cfg = TrainConfig(layers=(hp.l * n_markers, hp.hidden, n_markers), alpha=hp.alpha, sigma=hp.sigma,
                          clip_norm=hp.clip_norm, window_len=hp.window_len, loss=loss, seed=seed)
        return QrnnForecaster(cfg)
    if method.startswith("rnn"):
        loss = LossKind(method.split("-")[1])
        cfg = RealRnnConfig(layers=(3 * hp.l * n_markers, hp.hidden, 3 * n_markers), alpha=hp.alpha,
                            sigma=hp.sigma, clip_norm=hp.clip_norm, window_len=hp.window_len, loss=loss,
                            seed=seed)
        return RnnForecaster(cfg)
    if method == "qlms":
        return QlmsForecaster(n_markers, hp.l, hp.alpha)
    return LmsForecaster(n_markers, hp.l, hp.alpha)
