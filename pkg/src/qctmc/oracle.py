"""Independent reference solutions used to cross-check the main numerics.

Nothing here goes through the Pade exponential: vectorized dynamics are
integrated with classical fourth-order Runge-Kutta, and classical chains use
closed forms where they exist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Rk4Options", "rk4_propagate", "classical_transient", "STEPS_PER_UNIT"]

STEPS_PER_UNIT = 10_000


@dataclass(frozen=True)
class Rk4Options:
    steps: int
    t_final: float

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")

    @classmethod
    def for_time(cls, t_final, per_unit=STEPS_PER_UNIT):
        return cls(max(1, math.ceil(per_unit * t_final)), t_final)


def rk4_propagate(mmat, v0, opts: Rk4Options):
    """Solve ``v' = mmat @ v`` from ``v0`` up to ``opts.t_final`` with fixed-step RK4."""
    a = np.asarray(mmat)
    v = np.array(v0, dtype=np.result_type(a, np.asarray(v0), float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("mmat must be square")
    if v.shape[0] != a.shape[0]:
        raise ValueError(f"v0 length {v.shape[0]} does not match mmat size {a.shape[0]}")
    h = opts.t_final / opts.steps
    for _ in range(opts.steps):
        k1 = a @ v
        k2 = a @ (v + 0.5 * h * k1)
        k3 = a @ (v + 0.5 * h * k2)
        k4 = a @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def _check_rates(q):
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("rate matrix must be square")
    off = q - np.diag(np.diag(q))
    if np.any(off < 0):
        raise ValueError("negative off-diagonal rate")
    if not np.allclose(np.diag(q), -off.sum(axis=1), atol=1e-9, rtol=0):
        raise ValueError("diagonal must equal minus the off-diagonal row sums")
    return q


def classical_transient(rates, p0, t, steps_per_unit=STEPS_PER_UNIT):
    """Distribution ``p(t)`` of a classical CTMC with ``dp/dt = p Q``.

    Two-state chains use the closed form; larger chains fall back to RK4.
    """
    q = _check_rates(rates)
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (q.shape[0],):
        raise ValueError("p0 does not match the rate matrix")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return p0.copy()
    if q.shape[0] == 2:
        lam, mu = q[0, 1], q[1, 0]
        total = lam + mu
        if total == 0:
            return p0.copy()
        stay0 = mu / total + (p0[0] - mu / total) * math.exp(-total * t)
        return np.array([stay0, 1.0 - stay0])
    return rk4_propagate(q.T, p0, Rk4Options.for_time(t, steps_per_unit))
