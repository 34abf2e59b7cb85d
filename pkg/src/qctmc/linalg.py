"""Dense complex linear algebra helpers.

Operators are plain ``numpy`` complex arrays. Vectorization is row-major:
the matrix entry ``a[i, j]`` of a ``d x d`` operator lives at index
``i * d + j`` of its vector, so that ``l2v(A @ B @ C) == kron(A, C.T) @ l2v(B)``.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "as_matrix",
    "kron",
    "dagger",
    "l2v",
    "v2l",
    "partial_trace_quantum",
    "is_hermitian",
    "is_psd",
    "frobenius_norm",
]

DEFAULT_TOL = 1e-9


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a finite 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _require_square(a, name="matrix"):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")


def kron(a, b):
    """Kronecker (tensor) product of two matrices."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def dagger(a):
    """Hermitian adjoint (conjugate transpose)."""
    return as_matrix(a).conj().T


def l2v(a):
    """Rearrange a square operator into a vector of length ``d**2``."""
    a = np.asarray(a, dtype=np.complex128)
    _require_square(a, "operator")
    return a.reshape(-1).copy()


def v2l(v):
    """Inverse of :func:`l2v`.

    Accepts a 1-D vector or a column vector whose length is a perfect square.
    """
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def partial_trace_quantum(rho, n, d):
    """Trace out the ``d``-dimensional second factor of an ``(n*d) x (n*d)`` operator.

    For an instantaneous description this is the classical marginal: an
    ``n x n`` matrix whose diagonal holds the probability mass per state.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (n * d, n * d):
        raise ValueError(f"expected shape {(n * d, n * d)}, got {rho.shape}")
    return np.einsum("ikjk->ij", rho.reshape(n, d, n, d))


def is_hermitian(a, tol=DEFAULT_TOL):
    a = np.asarray(a, dtype=np.complex128)
    _require_square(a)
    if a.size == 0:
        return True
    return float(np.max(np.abs(a - a.conj().T))) <= tol


def is_psd(a, tol=DEFAULT_TOL):
    """Hermitian within ``tol`` and smallest eigenvalue at least ``-tol``.

    The eigenvalues are taken of the Hermitian part ``(a + a^dagger) / 2``.
    """
    a = np.asarray(a, dtype=np.complex128)
    _require_square(a)
    if not is_hermitian(a, tol):
        return False
    if a.size == 0:
        return True
    herm = 0.5 * (a + a.conj().T)
    return float(np.linalg.eigvalsh(herm)[0]) >= -tol


def frobenius_norm(a):
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))
