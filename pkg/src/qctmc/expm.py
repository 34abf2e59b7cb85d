"""Matrix exponential by scaling and squaring with adaptive-order Pade approximants.

The argument is scaled by the smallest power of two ``m`` that brings its
Frobenius norm under ``scale_threshold``. Diagonal Pade approximants of
increasing order are then formed until two consecutive ones differ by at
most ``epsilon`` (Frobenius norm), and the result is squared ``log2(m)`` times.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExpmOptions",
    "ExpmResult",
    "SingularDenominatorError",
    "pade_coefficients",
    "pade",
    "expm",
    "ExpmCache",
    "expm_apply",
]


class SingularDenominatorError(ArithmeticError):
    """The Pade denominator could not be inverted; the argument needs more scaling."""


@dataclass(frozen=True)
class ExpmOptions:
    epsilon: float = 1e-13
    max_order: int = 13
    scale_threshold: float = 0.5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_order < 1:
            raise ValueError("max_order must be at least 1")
        if not self.scale_threshold > 0:
            raise ValueError("scale_threshold must be positive")


@dataclass
class ExpmResult:
    value: np.ndarray
    order_used: int
    scaling_power: int
    increments: list = field(default_factory=list)
    warning: str | None = None


def pade_coefficients(k):
    """Coefficients ``c_i = (2k-i)! k! / ((2k)! (k-i)! i!)`` for ``i = 0..k``."""
    f = math.factorial
    return [f(2 * k - i) * f(k) / (f(2 * k) * f(k - i) * f(i)) for i in range(k + 1)]


def _pade_from_powers(powers, k):
    coeffs = pade_coefficients(k)
    num = np.zeros_like(powers[0])
    den = np.zeros_like(powers[0])
    for i, c in enumerate(coeffs):
        num += c * powers[i]
        den += (-1) ** i * c * powers[i]
    try:
        out = np.linalg.solve(den, num)
    except np.linalg.LinAlgError as exc:
        raise SingularDenominatorError(f"Pade denominator of order {k} is singular") from exc
    if not np.all(np.isfinite(out)):
        raise SingularDenominatorError(f"Pade approximant of order {k} is not finite")
    return out


def _square(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    return a


def pade(a, k):
    """The ``[k/k]`` Pade approximant to ``exp(a)``."""
    a = _square(a)
    if k < 0:
        raise ValueError("order must be nonnegative")
    powers = [np.eye(a.shape[0], dtype=np.complex128)]
    for _ in range(k):
        powers.append(powers[-1] @ a)
    return _pade_from_powers(powers, k)


def expm(a, opts: ExpmOptions | None = None) -> ExpmResult:
    opts = opts or ExpmOptions()
    a = _square(a)
    size = a.shape[0]
    ident = np.eye(size, dtype=np.complex128)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return ExpmResult(ident, 0, 0)
    if not math.isfinite(norm):
        raise ValueError("matrix contains NaN or Inf entries")

    s = max(0, math.ceil(math.log2(norm / opts.scale_threshold)))
    while norm / 2.0**s > opts.scale_threshold:
        s += 1
    scaled = a / 2.0**s

    powers = [ident, scaled]
    prev = _pade_from_powers(powers, 1)
    increments = []
    warning = None
    k = 1
    while True:
        if k >= opts.max_order:
            warning = (
                f"Pade order cap {opts.max_order} reached with increment "
                f"{increments[-1] if increments else float('nan'):.3g} > epsilon {opts.epsilon:.3g}"
            )
            break
        powers.append(powers[-1] @ scaled)
        cur = _pade_from_powers(powers, k + 1)
        increments.append(float(np.linalg.norm(cur - prev)))
        prev = cur
        k += 1
        if increments[-1] <= opts.epsilon:
            break

    value = prev
    for _ in range(s):
        value = value @ value
    if not np.all(np.isfinite(value)):
        raise ArithmeticError("matrix exponential overflowed during squaring")
    return ExpmResult(value, k, s, increments, warning)


class ExpmCache:
    """Memo of ``expm(a * t)`` keyed by matrix content and ``t``.

    Meant to live for one measure computation. Insertions are single dict
    assignments, so concurrent readers see either no entry or a complete one.
    """

    def __init__(self, opts: ExpmOptions | None = None):
        self.opts = opts or ExpmOptions()
        self._store = {}
        self.warnings = []
        self.calls = 0

    @staticmethod
    def _digest(a):
        return hashlib.blake2b(np.ascontiguousarray(a).tobytes(), digest_size=16).digest()

    def get(self, a, t):
        a = np.asarray(a, dtype=np.complex128)
        key = (self._digest(a), a.shape, float(t))
        hit = self._store.get(key)
        if hit is None:
            self.calls += 1
            res = expm(a * float(t), self.opts)
            if res.warning:
                self.warnings.append(res.warning)
            hit = res.value
            hit.setflags(write=False)
            self._store[key] = hit
        return hit


def expm_apply(a, t, v, opts: ExpmOptions | None = None, cache: ExpmCache | None = None):
    """``expm(a * t) @ v``, reusing ``cache`` when given."""
    a = _square(a)
    v = np.asarray(v, dtype=np.complex128)
    if v.shape[0] != a.shape[0]:
        raise ValueError(f"vector length {v.shape[0]} does not match matrix size {a.shape[0]}")
    if t == 0:
        return v.copy()
    if cache is None:
        return expm(a * float(t), opts).value @ v
    return cache.get(a, t) @ v
