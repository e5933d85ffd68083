"""Quaternion arithmetic on numpy arrays.

Quaternion-valued arrays are stored as real arrays whose trailing axis has
length 4 and holds the components ``(a, b, c, d)`` of ``a + ib + jc + kd``.
A vector of ``N`` quaternions therefore has shape ``(N, 4)`` and an ``M x N``
matrix has shape ``(M, N, 4)``. All functions broadcast over leading axes and
preserve the floating dtype of their inputs.

:class:`Quaternion` is a small immutable scalar wrapper for interactive use
and tests; the numerical code works on the raw arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, DomainError

__all__ = [
    "Involution",
    "Quaternion",
    "as_quat",
    "qmul",
    "conj",
    "modulus",
    "sqnorm",
    "inverse",
    "rotate",
    "matvec",
    "hermitian",
    "hadamard",
    "outer",
    "left_matrix",
    "pure",
    "ONE",
    "I",
    "J",
    "K",
]


class Involution(Enum):
    """Selector of ``mu`` in the rotation ``q^mu = mu q mu^-1``."""

    ONE = "1"
    I = "i"  # noqa: E741
    J = "j"
    K = "k"

    @property
    def unit(self) -> np.ndarray:
        return _UNITS[self.value].copy()


_UNITS = {
    "1": np.array([1.0, 0.0, 0.0, 0.0]),
    "i": np.array([0.0, 1.0, 0.0, 0.0]),
    "j": np.array([0.0, 0.0, 1.0, 0.0]),
    "k": np.array([0.0, 0.0, 0.0, 1.0]),
}

# Component signs of mu q mu^-1 for a basis unit mu: the real part and the
# mu-part are kept, the two other imaginary parts flip.
_ROTATION_SIGNS = {
    "1": np.array([1.0, 1.0, 1.0, 1.0]),
    "i": np.array([1.0, 1.0, -1.0, -1.0]),
    "j": np.array([1.0, -1.0, 1.0, -1.0]),
    "k": np.array([1.0, -1.0, -1.0, 1.0]),
}

_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


def as_quat(x) -> np.ndarray:
    """Convert ``x`` to a float array with a trailing axis of length 4."""
    if isinstance(x, Quaternion):
        return x.array
    arr = np.asarray(x)
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    if arr.ndim == 0 or arr.shape[-1] != 4:
        raise DimensionMismatch("quaternion arrays need a trailing axis of length 4", arr.shape)
    return arr


def qmul(p, q) -> np.ndarray:
    """Hamilton product ``p q`` with numpy broadcasting over leading axes."""
    p = as_quat(p)
    q = as_quat(q)
    pa, pb, pc, pd = np.moveaxis(p, -1, 0)
    qa, qb, qc, qd = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pa * qa - pb * qb - pc * qc - pd * qd,
            pa * qb + pb * qa + pc * qd - pd * qc,
            pa * qc - pb * qd + pc * qa + pd * qb,
            pa * qd + pb * qc - pc * qb + pd * qa,
        ],
        axis=-1,
    )


def conj(q) -> np.ndarray:
    return as_quat(q) * _CONJ


def sqnorm(q) -> np.ndarray:
    """Squared modulus ``|q|^2`` of every entry."""
    q = as_quat(q)
    return np.sum(q * q, axis=-1)


def _scaled(q):
    """Split ``q`` into ``m * u`` with ``m = max |component|`` so squaring ``u`` cannot underflow."""
    m = np.max(np.abs(q), axis=-1)
    safe = np.where(m > 0, m, 1)
    return m, q / safe[..., None]


def modulus(q) -> np.ndarray:
    m, u = _scaled(as_quat(q))
    return m * np.sqrt(sqnorm(u))


def inverse(q) -> np.ndarray:
    """Entry-wise ``q* / |q|^2``; raises :class:`DomainError` on a zero entry."""
    q = as_quat(q)
    m, u = _scaled(q)
    if np.any(m == 0):
        raise DomainError("inverse of a zero quaternion (division by zero modulus)")
    return conj(u) / (sqnorm(u) * m)[..., None]


def _involution(mu) -> Involution:
    if isinstance(mu, Involution):
        return mu
    try:
        return Involution(str(mu))
    except ValueError:
        raise DomainError(f"unknown involution {mu!r}; expected one of 1, i, j, k") from None


def rotate(q, mu) -> np.ndarray:
    """Return ``mu q mu^-1`` for ``mu`` in ``{1, i, j, k}``."""
    return as_quat(q) * _ROTATION_SIGNS[_involution(mu).value]


def pure(xyz) -> np.ndarray:
    """Embed 3-vectors ``(..., 3)`` as pure quaternions ``(..., 4)``."""
    xyz = np.asarray(xyz, dtype=float)
    if xyz.shape[-1] != 3:
        raise DimensionMismatch("pure quaternion embedding needs 3 components", xyz.shape)
    out = np.zeros(xyz.shape[:-1] + (4,), dtype=xyz.dtype)
    out[..., 1:] = xyz
    return out


def left_matrix(A) -> np.ndarray:
    """Real ``(4M, 4N)`` matrix of left multiplication by the ``M x N`` quaternion matrix ``A``.

    ``left_matrix(A) @ x.reshape(-1)`` equals ``matvec(A, x).reshape(-1)``
    and ``left_matrix(hermitian(A)) == left_matrix(A).T``.
    """
    A = as_quat(A)
    if A.ndim != 3:
        raise DimensionMismatch("left_matrix expects an (M, N, 4) array", A.shape)
    a, b, c, d = np.moveaxis(A, -1, 0)
    blocks = np.stack(
        [
            np.stack([a, -b, -c, -d], axis=-1),
            np.stack([b, a, -d, c], axis=-1),
            np.stack([c, d, a, -b], axis=-1),
            np.stack([d, -c, b, a], axis=-1),
        ],
        axis=-2,
    )  # (M, N, 4, 4)
    M, N = A.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(4 * M, 4 * N)


def matvec(A, x) -> np.ndarray:
    """Quaternion matrix-vector product: ``(M, N, 4) x (N, 4) -> (M, 4)``."""
    A = as_quat(A)
    x = as_quat(x)
    if A.ndim != 3 or x.ndim != 2 or A.shape[1] != x.shape[0]:
        raise DimensionMismatch("matvec dimensions do not conform", A.shape, x.shape)
    return qmul(A, x[None, :, :]).sum(axis=1)


def hermitian(A) -> np.ndarray:
    """Conjugate transpose of an ``(M, N, 4)`` quaternion matrix."""
    A = as_quat(A)
    if A.ndim != 3:
        raise DimensionMismatch("hermitian expects an (M, N, 4) array", A.shape)
    return conj(A).transpose(1, 0, 2)


def hadamard(x, y) -> np.ndarray:
    """Entry-wise Hamilton product ``x_m y_m`` (operand order preserved)."""
    x = as_quat(x)
    y = as_quat(y)
    if x.shape != y.shape:
        raise DimensionMismatch("hadamard operands differ in shape", x.shape, y.shape)
    return qmul(x, y)


def outer(x, y) -> np.ndarray:
    """``x y^H`` for quaternion vectors: ``(M, 4), (N, 4) -> (M, N, 4)``.

    A leading batch axis is summed, so ``outer(X, Y)`` with ``X`` of shape
    ``(T, M, 4)`` and ``Y`` of shape ``(T, N, 4)`` returns ``sum_t x_t y_t^H``.
    """
    x = as_quat(x)
    y = conj(y)
    if x.ndim == 2:
        x = x[None]
        y = y[None]
    if x.ndim != 3 or y.ndim != 3 or x.shape[0] != y.shape[0]:
        raise DimensionMismatch("outer operands do not conform", x.shape, y.shape)
    T, M, _ = x.shape
    N = y.shape[1]
    # P[m, i, n, j] = sum_t x[t, m, i] * y[t, n, j], then Hamilton-combine i, j
    P = (x.reshape(T, M * 4).T @ y.reshape(T, N * 4)).reshape(M, 4, N, 4)
    P = P.transpose(0, 2, 1, 3)
    return np.stack(
        [
            P[..., 0, 0] - P[..., 1, 1] - P[..., 2, 2] - P[..., 3, 3],
            P[..., 0, 1] + P[..., 1, 0] + P[..., 2, 3] - P[..., 3, 2],
            P[..., 0, 2] - P[..., 1, 3] + P[..., 2, 0] + P[..., 3, 1],
            P[..., 0, 3] + P[..., 1, 2] - P[..., 2, 1] + P[..., 3, 0],
        ],
        axis=-1,
    )


@dataclass(frozen=True)
class Quaternion:
    """Immutable quaternion scalar ``a + ib + jc + kd``."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        arr = as_quat(arr)
        if arr.shape != (4,):
            raise DimensionMismatch("expected a single quaternion", arr.shape)
        return cls(*(float(v) for v in arr))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))

    def _coerce(self, other):
        if isinstance(other, Quaternion):
            return other.array
        if np.isscalar(other):
            return np.array([float(other), 0.0, 0.0, 0.0])
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Quaternion.from_array(self.array + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Quaternion.from_array(self.array - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Quaternion.from_array(o - self.array)

    def __neg__(self):
        return Quaternion(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Quaternion.from_array(qmul(self.array, o))

    def __rmul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Quaternion.from_array(qmul(o, self.array))

    def __truediv__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Quaternion.from_array(self.array / scalar)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.a, -self.b, -self.c, -self.d)

    def __abs__(self) -> float:
        return float(modulus(self.array))

    def inverse(self) -> "Quaternion":
        return Quaternion.from_array(inverse(self.array))

    def rotate(self, mu) -> "Quaternion":
        return Quaternion.from_array(rotate(self.array, mu))

    def isclose(self, other, atol=1e-12) -> bool:
        return bool(np.allclose(self.array, Quaternion._coerce(self, other), rtol=0, atol=atol))

    def __repr__(self):
        return f"Quaternion({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)  # noqa: E741
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)
