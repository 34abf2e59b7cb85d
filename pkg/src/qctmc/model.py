"""Quantum continuous-time Markov chains.

A chain couples a finite set of classical states with a ``d``-dimensional
quantum register. Each state ``s`` carries a Hamiltonian ``H_s`` and each
jump carries an operator ``L`` that moves the register from one classical
state to another. The composite operators live on ``C^n (x) C^d`` with the
classical factor first, so the classical block of state index ``k`` spans
rows ``k*d .. (k+1)*d - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .linalg import DEFAULT_TOL, as_matrix, is_hermitian, is_psd

__all__ = [
    "JumpOperator",
    "QuantumCtmc",
    "InstantaneousDescription",
    "StructureError",
    "STRUCTURE_TOL",
    "validate",
    "embed_id",
    "extract_id",
    "projector",
    "super_projector",
    "governing_matrix",
    "adapted_governing_matrix",
    "embed_classical",
    "apollonian_gen1",
]

STRUCTURE_TOL = 1e-7


class StructureError(ValueError):
    """An operator lost the block-diagonal (mixed) classical structure."""


def _frozen(a, name):
    arr = as_matrix(a, name).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class JumpOperator:
    source: str
    target: str
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "source", str(self.source))
        object.__setattr__(self, "target", str(self.target))
        object.__setattr__(self, "matrix", _frozen(self.matrix, "jump matrix"))


@dataclass(frozen=True, eq=False)
class QuantumCtmc:
    """Classical states, per-state Hamiltonians, jumps and labels.

    Hamiltonians that are not given default to zero. Construction performs
    no semantic checks; call :func:`validate` for a list of violations.
    """

    states: tuple
    dim: int
    hamiltonians: Mapping[str, np.ndarray] = field(default_factory=dict)
    jumps: tuple = ()
    labels: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        if len(set(states)) != len(states):
            raise ValueError("duplicate classical state ids")
        if int(self.dim) < 1:
            raise ValueError("dim must be a positive integer")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(
            self,
            "hamiltonians",
            {str(s): _frozen(h, f"hamiltonian of {s}") for s, h in self.hamiltonians.items()},
        )
        object.__setattr__(
            self,
            "jumps",
            tuple(j if isinstance(j, JumpOperator) else JumpOperator(*j) for j in self.jumps),
        )
        object.__setattr__(
            self,
            "labels",
            {str(s): frozenset(str(a) for a in props) for s, props in self.labels.items()},
        )
        object.__setattr__(self, "_index", {s: k for k, s in enumerate(states)})
        object.__setattr__(self, "_cache", {})

    @property
    def n(self):
        return len(self.states)

    @property
    def size(self):
        """Composite dimension ``N = n * d``."""
        return self.n * self.dim

    def index(self, state):
        try:
            return self._index[str(state)]
        except KeyError:
            raise KeyError(f"unknown classical state {state!r}") from None

    def label(self, state):
        return self.labels.get(str(state), frozenset())

    @property
    def propositions(self):
        return frozenset().union(*self.labels.values()) if self.labels else frozenset()

    def hamiltonian(self, state):
        h = self.hamiltonians.get(str(state))
        return np.zeros((self.dim, self.dim), dtype=np.complex128) if h is None else h

    def classical_ket_bra(self, target, source):
        """``|target><source|`` on the classical factor."""
        e = np.zeros((self.n, self.n), dtype=np.complex128)
        e[self.index(target), self.index(source)] = 1.0
        return e

    def full_hamiltonian(self):
        """``sum_s |s><s| (x) H_s`` as an ``N x N`` matrix."""
        h = np.zeros((self.size, self.size), dtype=np.complex128)
        d = self.dim
        for s in self.states:
            k = self.index(s)
            h[k * d:(k + 1) * d, k * d:(k + 1) * d] = self.hamiltonian(s)
        return h

    def full_jumps(self):
        """Each jump as ``|target><source| (x) L`` on the composite space."""
        return [np.kron(self.classical_ket_bra(j.target, j.source), j.matrix) for j in self.jumps]


@dataclass(frozen=True, eq=False)
class InstantaneousDescription:
    """Block-diagonal (partial) density operator, one ``d x d`` block per state.

    States without a block carry zero mass. ``partial`` marks a sub-normalized
    operator such as the result of a path-measure computation.
    """

    blocks: Mapping[str, np.ndarray]
    partial: bool = False

    def __post_init__(self):
        object.__setattr__(
            self,
            "blocks",
            {str(s): _frozen(b, f"block of {s}") for s, b in self.blocks.items()},
        )

    def block(self, state, dim):
        b = self.blocks.get(str(state))
        return np.zeros((dim, dim), dtype=np.complex128) if b is None else b

    def trace(self):
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def scaled(self, factor):
        return InstantaneousDescription(
            {s: factor * b for s, b in self.blocks.items()}, partial=self.partial
        )


def validate(m: QuantumCtmc, rho0: InstantaneousDescription | None = None, tol=DEFAULT_TOL):
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    d = m.dim
    declared = set(m.states)
    for s, h in m.hamiltonians.items():
        if s not in declared:
            problems.append(f"hamiltonian for undeclared state {s!r}")
        if h.shape != (d, d):
            problems.append(f"hamiltonian of {s!r} has shape {h.shape}, expected {(d, d)}")
        elif not is_hermitian(h, tol):
            problems.append(f"hamiltonian of {s!r} is not Hermitian")
    for k, j in enumerate(m.jumps):
        if j.source == j.target:
            problems.append(f"self-loop jump #{k}: jump from = to ({j.source!r})")
        for end in (j.source, j.target):
            if end not in declared:
                problems.append(f"jump #{k} references undeclared state {end!r}")
        if j.matrix.shape != (d, d):
            problems.append(f"jump #{k} matrix has shape {j.matrix.shape}, expected {(d, d)}")
    for s in m.labels:
        if s not in declared:
            problems.append(f"label for undeclared state {s!r}")
    if rho0 is not None:
        for s, b in rho0.blocks.items():
            if s not in declared:
                problems.append(f"initial block for undeclared state {s!r}")
                continue
            if b.shape != (d, d):
                problems.append(f"initial block of {s!r} has shape {b.shape}, expected {(d, d)}")
            elif not is_psd(b, tol):
                problems.append(f"initial block of {s!r} is not Hermitian positive semidefinite")
        total = rho0.trace()
        if not rho0.partial and abs(total - 1.0) > tol:
            problems.append(f"trace deficit: total trace {total:.12g} differs from 1")
        elif rho0.partial and total > 1.0 + tol:
            problems.append(f"partial ID has total trace {total:.12g} > 1")
    return problems


def embed_id(rho: InstantaneousDescription, m: QuantumCtmc):
    """Dense ``N x N`` operator ``sum_s |s><s| (x) rho_s``."""
    d = m.dim
    big = np.zeros((m.size, m.size), dtype=np.complex128)
    for s, b in rho.blocks.items():
        if b.shape != (d, d):
            raise ValueError(f"block of {s!r} has shape {b.shape}, expected {(d, d)}")
        k = m.index(s)
        big[k * d:(k + 1) * d, k * d:(k + 1) * d] = b
    return big


def off_block_magnitude(big, m: QuantumCtmc):
    """Largest entry magnitude outside the classical diagonal blocks."""
    mask = np.kron(1.0 - np.eye(m.n), np.ones((m.dim, m.dim)))
    return float(np.max(np.abs(big) * mask)) if big.size else 0.0


def extract_id(big, m: QuantumCtmc, tol=STRUCTURE_TOL, partial=True):
    """Read the diagonal classical blocks of a dense operator.

    Raises :class:`StructureError` if any off-diagonal classical block has an
    entry larger than ``tol``.
    """
    big = np.asarray(big, dtype=np.complex128)
    if big.shape != (m.size, m.size):
        raise ValueError(f"expected shape {(m.size, m.size)}, got {big.shape}")
    drift = off_block_magnitude(big, m)
    if drift > tol:
        raise StructureError(
            f"off-diagonal classical block magnitude {drift:.3g} exceeds {tol:.3g}"
        )
    d = m.dim
    blocks = {s: big[k * d:(k + 1) * d, k * d:(k + 1) * d] for k, s in enumerate(m.states)}
    return InstantaneousDescription(blocks, partial=partial)


def _sat_key(m, sat):
    members = frozenset(str(s) for s in sat)
    unknown = members - set(m.states)
    if unknown:
        raise KeyError(f"unknown classical states {sorted(unknown)}")
    return members


def projector(sat: Iterable, m: QuantumCtmc):
    """``P = sum_{s in sat} |s><s| (x) I`` (diagonal 0/1, ``N x N``)."""
    members = _sat_key(m, sat)
    diag = np.repeat([1.0 if s in members else 0.0 for s in m.states], m.dim)
    return np.diag(diag).astype(np.complex128)


def super_projector(sat: Iterable, m: QuantumCtmc):
    """``P (x) P`` acting on vectorized operators; ``N^2 x N^2``."""
    p = projector(sat, m)
    return np.kron(p, p)


def super_projector_diag(sat: Iterable, m: QuantumCtmc):
    """Diagonal of :func:`super_projector` as a real 0/1 vector."""
    p = np.diag(projector(sat, m)).real
    return np.kron(p, p)


def _lindblad_matrix(h, jumps, size):
    """Vectorized Lindblad generator for row-major ``l2v``."""
    ident = np.eye(size, dtype=np.complex128)
    out = -1j * np.kron(h, ident) + 1j * np.kron(ident, h.T)
    decay = np.zeros((size, size), dtype=np.complex128)
    for lj in jumps:
        out += np.kron(lj, lj.conj())
        decay += lj.conj().T @ lj
    out -= 0.5 * np.kron(decay, ident)
    out -= 0.5 * np.kron(ident, decay.T)
    return out


def governing_matrix(m: QuantumCtmc):
    """Full governing matrix, ``N^2 x N^2``."""
    return adapted_governing_matrix(m, m.states)


def adapted_governing_matrix(m: QuantumCtmc, sat: Iterable):
    """Governing matrix with generators ``H P`` and ``L_j P`` for ``P`` of ``sat``.

    States outside ``sat`` become absorbing. Results are memoized per model
    and satisfaction set and returned read-only.
    """
    key = ("adapted", _sat_key(m, sat))
    cached = m._cache.get(key)
    if cached is not None:
        return cached
    p = projector(key[1], m)
    h = m.full_hamiltonian() @ p
    jumps = [lj @ p for lj in m.full_jumps()]
    out = _lindblad_matrix(h, jumps, m.size)
    out.setflags(write=False)
    m._cache[key] = out
    return out


def embed_classical(rates, labels=None, states=None, tol=DEFAULT_TOL):
    """Model a classical CTMC as a quantum CTMC over a one-dimensional register.

    Each positive rate ``q`` from ``s1`` to ``s2`` becomes the 1x1 jump
    operator ``[sqrt(q)]``; its dissipator moves mass at exactly rate ``q``.
    """
    q = np.asarray(rates, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("rate matrix must be square")
    n = q.shape[0]
    off = q - np.diag(np.diag(q))
    if np.any(off < 0):
        raise ValueError("rate matrix has a negative off-diagonal rate")
    if not np.allclose(np.diag(q), -off.sum(axis=1), atol=tol, rtol=0):
        raise ValueError("rate matrix diagonal must equal minus the off-diagonal row sums")
    states = tuple(str(s) for s in (states if states is not None else range(n)))
    if len(states) != n:
        raise ValueError("number of state ids does not match the rate matrix")
    jumps = [
        JumpOperator(states[i], states[j], [[np.sqrt(off[i, j])]])
        for i in range(n)
        for j in range(n)
        if i != j and off[i, j] > 0
    ]
    return QuantumCtmc(states, 1, {}, jumps, dict(labels or {}))


def apollonian_gen1():
    """Open quantum walk of a qutrit on the first-generation Apollonian network.

    Returns the model (nodes ``"0"``..``"3"``, node ``"3"`` labelled
    ``center``) and the initial description ``|3><3| (x) I/3``.
    """
    w = np.exp(2j * np.pi / 3)
    r3 = np.sqrt(3.0)
    x = np.array([1, 1, 1]) / r3
    y = np.array([1, w, w**2]) / r3
    z = np.array([1, w**2, w]) / r3
    a, b, c = (np.outer(v, v.conj()) for v in (x, y, z))
    edges = [
        ("0", "1", a), ("0", "2", b), ("0", "3", c),
        ("1", "2", a), ("1", "0", b), ("1", "3", c),
        ("2", "0", a), ("2", "1", b), ("2", "3", c),
        ("3", "0", c / r3), ("3", "1", b + c / r3), ("3", "2", a + c / r3),
    ]
    model = QuantumCtmc(
        states=("0", "1", "2", "3"),
        dim=3,
        jumps=[JumpOperator(s, t, mat) for s, t, mat in edges],
        labels={"0": (), "1": (), "2": (), "3": ("center",)},
    )
    rho0 = InstantaneousDescription({"3": np.eye(3) / 3})
    return model, rho0
