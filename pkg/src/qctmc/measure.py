"""Probability measures of cylinder sets and multiphase until formulas.

Everything is computed on vectorized operators: an instantaneous description
is embedded as a dense ``N x N`` operator, flattened with ``l2v`` and pushed
through exponentials of (adapted) governing matrices. Super-projectors are
diagonal, so they are applied as elementwise masks.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .expm import ExpmCache, ExpmOptions
from .linalg import l2v, v2l
from .model import (
    STRUCTURE_TOL,
    InstantaneousDescription,
    QuantumCtmc,
    adapted_governing_matrix,
    embed_id,
    extract_id,
    off_block_magnitude,
    super_projector_diag,
)

__all__ = [
    "InvalidSpecError",
    "CylinderStep",
    "CylinderSpec",
    "UntilSpec",
    "QuadratureOptions",
    "MeasureResult",
    "cylinder_measure",
    "until_measure",
    "phase_integral",
    "PROBABILITY_TOL",
]

PROBABILITY_TOL = 1e-9


class InvalidSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CylinderStep:
    interval: tuple
    to: str

    def __post_init__(self):
        lo, hi = (float(x) for x in self.interval)
        object.__setattr__(self, "interval", (lo, hi))
        object.__setattr__(self, "to", str(self.to))


@dataclass(frozen=True)
class CylinderSpec:
    """``start -J_0-> s_1 -J_1-> ... s_K`` with sojourn-time intervals ``J_k``."""

    start: str
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "start", str(self.start))
        object.__setattr__(
            self,
            "steps",
            tuple(s if isinstance(s, CylinderStep) else CylinderStep(*s) for s in self.steps),
        )

    def check(self, m: QuantumCtmc):
        for s in (self.start, *(st.to for st in self.steps)):
            if s not in m.states:
                raise InvalidSpecError(f"cylinder references undeclared state {s!r}")
        for k, st in enumerate(self.steps):
            lo, hi = st.interval
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InvalidSpecError(f"step {k}: interval endpoints must be finite")
            if not 0 <= lo < hi:
                raise InvalidSpecError(f"step {k}: interval must satisfy 0 <= lo < hi, got {st.interval}")


@dataclass(frozen=True)
class UntilSpec:
    """Satisfaction sets ``Phi_0..Phi_K`` and absolute intervals ``(a_k, b_k]``, k = 1..K."""

    phases: tuple
    intervals: tuple

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(frozenset(str(s) for s in p) for p in self.phases))
        object.__setattr__(
            self, "intervals", tuple((float(a), float(b)) for a, b in self.intervals)
        )

    @property
    def K(self):
        return len(self.intervals)

    def check(self, m: QuantumCtmc | None = None):
        if self.K < 1:
            raise InvalidSpecError("an until formula needs at least one interval")
        if len(self.phases) != self.K + 1:
            raise InvalidSpecError(
                f"{len(self.phases)} phases do not match {self.K} intervals (need K+1)"
            )
        prev_b = 0.0
        for k, (a, b) in enumerate(self.intervals, start=1):
            if not math.isfinite(a) or math.isnan(b):
                raise InvalidSpecError(f"interval {k}: left endpoint must be finite")
            if math.isinf(b) and k != self.K:
                raise InvalidSpecError(f"interval {k}: only the final interval may be unbounded")
            if a < 0:
                raise InvalidSpecError(f"interval {k}: negative left endpoint {a}")
            if b < a:
                raise InvalidSpecError(f"interval {k}: reversed interval ({a}, {b}]")
            if a < prev_b:
                raise InvalidSpecError(
                    f"interval {k}: ({a}, {b}] overlaps the previous interval ending at {prev_b}"
                )
            prev_b = b
        if m is not None:
            for k, p in enumerate(self.phases):
                unknown = p - set(m.states)
                if unknown:
                    raise InvalidSpecError(f"phase {k} references undeclared states {sorted(unknown)}")


@dataclass(frozen=True)
class QuadratureOptions:
    """Riemann-sum settings for the phase-switch integral.

    ``step`` (if given) takes precedence over ``samples``; the sample count is
    then ``ceil(length / step)``.
    """

    samples: int = 100
    step: float | None = None
    rule: str = "right"
    horizon_tol: float = 1e-8
    horizon_cap: float = float(2**20)

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.rule not in ("right", "mid"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if not self.horizon_tol > 0:
            raise ValueError("horizon_tol must be positive")
        if not self.horizon_cap > 0:
            raise ValueError("horizon_cap must be positive")

    def grid(self, length):
        """Sample count and step width for an interval of the given length."""
        if self.step is not None:
            count = max(1, math.ceil(length / self.step - 1e-12))
        else:
            count = self.samples
        return count, length / count


@dataclass
class MeasureResult:
    probability: float
    final_operator: InstantaneousDescription
    phases: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)


class _Workspace:
    """Per-computation cache of governing matrices, masks and exponentials."""

    def __init__(self, m: QuantumCtmc, expm_opts: ExpmOptions | None):
        self.m = m
        self.cache = ExpmCache(expm_opts)
        self.masks = {}
        self.timing = {"governing": 0.0, "expm": 0.0, "quadrature": 0.0}

    def gov(self, sat):
        t0 = time.perf_counter()
        out = adapted_governing_matrix(self.m, sat)
        self.timing["governing"] += time.perf_counter() - t0
        return out

    def mask(self, sat):
        key = frozenset(sat)
        if key not in self.masks:
            self.masks[key] = super_projector_diag(key, self.m)
        return self.masks[key]

    def exp(self, a, t):
        t0 = time.perf_counter()
        out = self.cache.get(a, t)
        self.timing["expm"] += time.perf_counter() - t0
        return out

    def evolve(self, sat, t, v):
        if t == 0:
            return v
        return self.exp(self.gov(sat), t) @ v


def _finish(ws: _Workspace, vecs, extra=None):
    m = ws.m
    ops = [v2l(v) for v in vecs]
    final = ops[-1]
    drift = max(off_block_magnitude(op, m) for op in ops)
    herm = max(float(np.max(np.abs(op - op.conj().T))) for op in ops)
    trace = complex(np.trace(final))
    phases = [extract_id(op, m, tol=STRUCTURE_TOL, partial=True) for op in ops]
    raw = trace.real
    diagnostics = {
        "raw_probability": raw,
        "trace_imag": abs(trace.imag),
        "structure_drift": drift,
        "hermiticity_drift": herm,
        "expm_calls": ws.cache.calls,
        "warnings": list(dict.fromkeys(ws.cache.warnings)),
    }
    if extra:
        diagnostics.update(extra)
    if raw < -PROBABILITY_TOL or raw > 1 + PROBABILITY_TOL:
        diagnostics["warnings"].append(f"probability {raw:.12g} outside [0, 1]")
    prob = min(1.0, max(0.0, raw))
    return MeasureResult(prob, phases[-1], phases, diagnostics, dict(ws.timing))


def _initial_vector(m, rho0):
    return l2v(embed_id(rho0, m))


def cylinder_measure(
    m: QuantumCtmc,
    rho0: InstantaneousDescription,
    spec: CylinderSpec,
    expm_opts: ExpmOptions | None = None,
) -> MeasureResult:
    """Probability of the cylinder set ``spec`` from the initial description ``rho0``.

    Each step restricts to the current state, lets the adapted dynamics run
    for the interval's lower bound, projects back onto the current state,
    runs for the interval's length and finally projects onto the successor.
    """
    spec.check(m)
    ws = _Workspace(m, expm_opts)
    v = ws.mask({spec.start}) * _initial_vector(m, rho0)
    vecs = [v]
    cur = spec.start
    for st in spec.steps:
        lo, hi = st.interval
        v = ws.evolve({cur}, lo, v)
        v = ws.mask({cur}) * v
        v = ws.evolve({cur}, hi - lo, v)
        v = ws.mask({st.to}) * v
        vecs.append(v)
        cur = st.to
    return _finish(ws, vecs)


def _complement(m, sat):
    return frozenset(m.states) - frozenset(sat)


def phase_integral(m: QuantumCtmc, prev, cur, a, b, quad: QuadratureOptions | None = None,
                   expm_opts: ExpmOptions | None = None):
    """Riemann sum of ``exp(M_cur (b-t)) P_not_prev M_prev exp(M_prev (t-a))`` over ``(a, b]``.

    Returned as a dense ``N^2 x N^2`` matrix; :func:`until_measure` applies
    the same sum directly to a vector instead.
    """
    quad = quad or QuadratureOptions()
    if not (math.isfinite(a) and math.isfinite(b)) or b < a:
        raise InvalidSpecError(f"phase integral needs finite a <= b, got ({a}, {b}]")
    ws = _Workspace(m, expm_opts)
    size = m.size**2
    if b == a:
        return np.zeros((size, size), dtype=np.complex128)
    return _integral_action(ws, prev, cur, a, b, quad, np.eye(size, dtype=np.complex128))


def _integral_action(ws: _Workspace, prev, cur, a, b, quad, v):
    """Apply the phase-switch Riemann sum to ``v`` (a vector or a matrix).

    The sum over ``i`` of ``E_cur^(M-i) u_i`` is accumulated Horner-style, so
    only two exponentials of width ``delta`` (plus half-steps for the
    midpoint rule) are ever formed.
    """
    t0 = time.perf_counter()
    count, delta = quad.grid(b - a)
    m_prev = ws.gov(prev)
    leave = ws.mask(_complement(ws.m, prev))
    e_prev = ws.exp(m_prev, delta)
    e_cur = ws.exp(ws.gov(cur), delta)
    mask = leave if v.ndim == 1 else leave[:, None]
    if quad.rule == "right":
        w = v
    else:
        w = ws.exp(m_prev, delta / 2) @ v
    acc = None
    for i in range(1, count + 1):
        if quad.rule == "right" or i > 1:
            w = e_prev @ w
        u = mask * (m_prev @ w)
        acc = u if acc is None else e_cur @ acc + u
    if quad.rule == "mid":
        acc = ws.exp(ws.gov(cur), delta / 2) @ acc
    ws.timing["quadrature"] += time.perf_counter() - t0
    return delta * acc


def until_measure(
    m: QuantumCtmc,
    rho0: InstantaneousDescription,
    spec: UntilSpec,
    quad: QuadratureOptions | None = None,
    expm_opts: ExpmOptions | None = None,
) -> MeasureResult:
    """Probability that a path satisfies ``Phi_0 U^(a_1,b_1] Phi_1 ... U^(a_K,b_K] Phi_K``.

    Intermediate phases combine paths that are still in ``Phi_{k-1}`` at
    ``b_k`` (and then also in ``Phi_k``) with paths that leave ``Phi_{k-1}``
    inside ``(a_k, b_k]`` and stay in ``Phi_k``. The last phase splits on
    whether the path already satisfies ``Phi_K`` at ``a_K``. An unbounded
    ``b_K`` is handled by doubling the horizon until the (monotone)
    probability settles.
    """
    quad = quad or QuadratureOptions()
    spec.check(m)
    ws = _Workspace(m, expm_opts)
    phases, intervals = spec.phases, spec.intervals
    K = spec.K

    v = ws.mask(phases[0]) * _initial_vector(m, rho0)
    vecs = [v]
    b_prev = 0.0
    for k in range(1, K):
        a, b = intervals[k - 1]
        before, after = phases[k - 1], phases[k]
        w = ws.mask(before) * ws.evolve(before, a - b_prev, v)
        stayed = ws.mask(before & after) * ws.evolve(before, b - a, w)
        if b > a:
            switched = ws.mask(after) * _integral_action(ws, before, after, a, b, quad, w)
        else:
            switched = np.zeros_like(w)
        v = stayed + switched
        vecs.append(v)
        b_prev = b

    a, b = intervals[-1]
    before, target = phases[K - 1], phases[K]
    waiting = before - target
    w = ws.evolve(before, a - b_prev, v)
    already = ws.mask(before & target) * w
    pending = ws.mask(waiting) * w

    def final_vector(length):
        return ws.mask(target) * ws.evolve(waiting, length, pending) + already

    extra = {"samples": [quad.grid(hi - lo)[0] if hi > lo else 0 for lo, hi in intervals[:-1]]}
    if math.isinf(b):
        length = 1.0
        v_last = final_vector(length)
        p_last = float(np.trace(v2l(v_last)).real)
        sequence = [p_last]
        converged = False
        while length < quad.horizon_cap:
            length = min(2 * length, quad.horizon_cap)
            v_new = final_vector(length)
            p_new = float(np.trace(v2l(v_new)).real)
            sequence.append(p_new)
            v_last, increment, p_last = v_new, p_new - p_last, p_new
            if abs(increment) < quad.horizon_tol:
                converged = True
                break
        extra["horizon"] = a + length
        extra["horizon_sequence"] = sequence
        vecs.append(v_last)
        res = _finish(ws, vecs, extra)
        if not converged:
            res.diagnostics["warnings"].append(
                f"horizon cap {quad.horizon_cap:g} reached before the probability settled"
            )
        return res
    extra["horizon"] = b
    vecs.append(final_vector(b - a))
    return _finish(ws, vecs, extra)
