"""Randomized valid models and the shared list of test models."""
import numpy as np

from qctmc.model import InstantaneousDescription, JumpOperator, QuantumCtmc, apollonian_gen1


def random_hermitian(rng, d, scale=1.0):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + g.conj().T) / 2


def random_density(rng, d, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_model(rng, n, d, jump_prob=0.6):
    states = tuple(f"s{k}" for k in range(n))
    hams = {s: random_hermitian(rng, d, 0.7) for s in states if rng.random() < 0.7}
    jumps = []
    for i, src in enumerate(states):
        for j, dst in enumerate(states):
            if i != j and rng.random() < jump_prob:
                g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                jumps.append(JumpOperator(src, dst, 0.6 * g))
    labels = {s: tuple(a for a in ("a", "b") if rng.random() < 0.5) for s in states}
    return QuantumCtmc(states, d, hams, jumps, labels)


def random_id(rng, m):
    weights = rng.dirichlet(np.ones(m.n))
    return InstantaneousDescription(
        {s: w * random_density(rng, m.dim) for s, w in zip(m.states, weights)}
    )


def sample_models(count=20, seed=20240611):
    """The Apollonian model followed by ``count`` random models with n <= 4, d <= 3."""
    rng = np.random.default_rng(seed)
    out = [apollonian_gen1()]
    for _ in range(count):
        m = random_model(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        out.append((m, random_id(rng, m)))
    return out


def subsets(states):
    states = list(states)
    for mask in range(2 ** len(states)):
        yield frozenset(s for k, s in enumerate(states) if mask >> k & 1)
