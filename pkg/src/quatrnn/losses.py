"""MSE and correntropy losses for quaternion-valued errors.

For a vector-valued error at one time step the kernel argument ``|e|^2`` is
the sum of squared moduli over all output entries, i.e. the total Euclidean
error of the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptySequence, LengthMismatch
from .quaternion import as_quat, sqnorm

__all__ = [
    "KernelConfig",
    "mse_loss",
    "quat_gauss_kernel",
    "real_gauss_kernel",
    "empirical_correntropy",
    "mcc_loss",
    "mcc_error_weight",
    "real_mcc_loss",
    "quat_kernel_peak",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelConfig:
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigError(f"kernel size sigma must be a positive finite number, got {self.sigma!r}")


def _cfg(cfg) -> KernelConfig:
    if isinstance(cfg, KernelConfig):
        return cfg
    return KernelConfig(float(cfg))


def quat_kernel_peak(cfg) -> float:
    """Maximum of the quaternion Gaussian kernel, ``4 / (sqrt(2 pi) sigma)``."""
    return 4.0 / (_SQRT_2PI * _cfg(cfg).sigma)


def mse_loss(e) -> float:
    """Sum of squared moduli of all entries of ``e`` (``e^H e`` for a vector)."""
    return float(np.sum(sqnorm(e)))


def _step_sqnorm(errors) -> np.ndarray:
    """Per-step total squared error for a ``(N, M, 4)`` or ``(N, 4)`` error sequence."""
    e = as_quat(errors)
    n2 = sqnorm(e)
    return n2.reshape(n2.shape[0], -1).sum(axis=1) if n2.ndim > 1 else n2


def quat_gauss_kernel(x, y, cfg) -> float:
    """Quaternion Gaussian kernel ``4/(sqrt(2 pi) sigma) exp(-|x - y|^2 / (2 sigma^2))``."""
    s = _cfg(cfg).sigma
    d2 = float(np.sum(sqnorm(as_quat(x) - as_quat(y))))
    return quat_kernel_peak(s) * math.exp(-d2 / (2.0 * s * s))


def real_gauss_kernel(x, y, cfg) -> float:
    """Real Gaussian kernel ``1/(sqrt(2 pi) sigma) exp(-(x - y)^2 / (2 sigma^2))``."""
    s = _cfg(cfg).sigma
    d = float(x) - float(y)
    return math.exp(-d * d / (2.0 * s * s)) / (_SQRT_2PI * s)


def empirical_correntropy(d, h, cfg) -> float:
    """Sample mean of the kernel between desired and actual sequences.

    ``d`` and ``h`` are sequences of quaternion vectors with identical shape
    ``(N, M, 4)`` (or ``(N, 4)`` for scalar width).
    """
    d = as_quat(d)
    h = as_quat(h)
    if d.shape != h.shape:
        raise LengthMismatch(f"sequence shapes differ: {d.shape} vs {h.shape}")
    if d.shape[0] == 0:
        raise EmptySequence("correntropy needs at least one sample")
    s = _cfg(cfg).sigma
    n2 = _step_sqnorm(d - h)
    return float(quat_kernel_peak(s) * np.mean(np.exp(-n2 / (2.0 * s * s))))


def mcc_loss(errors, cfg) -> float:
    """Negated empirical correntropy of an error sequence ``(N, M, 4)``."""
    e = as_quat(errors)
    if e.shape[0] == 0:
        raise EmptySequence("mcc_loss needs a nonempty error sequence")
    s = _cfg(cfg).sigma
    n2 = _step_sqnorm(e)
    return float(-quat_kernel_peak(s) * np.mean(np.exp(-n2 / (2.0 * s * s))))


def mcc_error_weight(e, cfg) -> float:
    """Attenuation ``exp(-|e|^2 / (2 sigma^2))`` applied to one step's error."""
    s = _cfg(cfg).sigma
    return float(np.exp(-np.sum(sqnorm(e)) / (2.0 * s * s)))


def real_mcc_loss(errors, cfg) -> float:
    """MCC loss for real errors ``(N, C)``: real kernel summed over channels, averaged over steps."""
    e = np.asarray(errors, dtype=float)
    if e.shape[0] == 0:
        raise EmptySequence("real_mcc_loss needs a nonempty error sequence")
    s = _cfg(cfg).sigma
    k = np.exp(-(e * e) / (2.0 * s * s)) / (_SQRT_2PI * s)
    return float(-k.reshape(e.shape[0], -1).sum(axis=1).mean())
