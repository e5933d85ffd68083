"""Split activation functions for quaternion networks.

A split activation applies one real function to each of the four components
of every quaternion entry independently. Backpropagation through it uses the
component-wise derivative (the pseudo-derivative), which is again a
quaternion array with one real derivative per component.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .quaternion import as_quat

__all__ = ["SplitActivation", "apply", "pseudo_derivative", "compact_ghr_derivative"]


class SplitActivation(str, Enum):
    TANH = "tanh"
    IDENTITY = "identity"

    @classmethod
    def parse(cls, value) -> "SplitActivation":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def _scalar(act: SplitActivation, x: np.ndarray) -> np.ndarray:
    if act is SplitActivation.TANH:
        return np.tanh(x)
    return x.copy()


def _scalar_derivative(act: SplitActivation, x: np.ndarray) -> np.ndarray:
    if act is SplitActivation.TANH:
        t = np.tanh(x)
        return 1.0 - t * t
    return np.ones_like(x)


def apply(act, x) -> np.ndarray:
    """Apply the split activation component-wise to a quaternion array."""
    return _scalar(SplitActivation.parse(act), as_quat(x))


def pseudo_derivative(act, x) -> np.ndarray:
    """Component-wise derivative of the split activation at ``x``.

    The result has the same shape as ``x``; component ``z`` of each entry
    holds the real derivative evaluated at component ``z`` of the input.
    """
    return _scalar_derivative(SplitActivation.parse(act), as_quat(x))


def compact_ghr_derivative(act, q) -> np.ndarray:
    """GHR derivative of a split activation, a real-valued quaternion.

    Equals one quarter of the sum of the four component derivatives; the
    imaginary parts of the result are always zero. Training uses
    :func:`pseudo_derivative`; this form is kept for cross-checking.
    """
    d = pseudo_derivative(act, q)
    out = np.zeros_like(d)
    out[..., 0] = d.mean(axis=-1)
    return out
