"""Seeded random generators used by the experiment harness and the tests."""

from __future__ import annotations

import numpy as np

from .derivatives import StateMatrix
from .matrices import hs_inner


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary via QR with the standard phase correction."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def floored_spectrum(rng: np.random.Generator, k: int, floor: float = 0.02) -> np.ndarray:
    """Probability vector of length k with every entry at least ``floor``."""
    if k * floor >= 1.0:
        raise ValueError(f"floor {floor} too large for {k} entries")
    p = rng.dirichlet(np.ones(k))
    p = floor + (1.0 - k * floor) * p
    return np.sort(p)[::-1]


def random_state(rng: np.random.Generator, n: int, m: int, floor: float = 0.02) -> StateMatrix:
    """Random state with Schmidt spectrum bounded away from zero.

    The floor keeps finite-difference oracles in their asymptotic regime;
    pass floor=0 for unconstrained Haar-like draws.
    """
    k = min(n, m)
    if floor > 0.0:
        p = floored_spectrum(rng, k, floor)
    else:
        p = rng.dirichlet(np.ones(k))
    u = random_unitary(rng, n)
    v = random_unitary(rng, m)
    x = (u[:, :k] * np.sqrt(p)) @ v[:k, :]
    return StateMatrix.normalized(x)


def random_singular_state(rng: np.random.Generator, n: int, rank: int, floor: float = 0.05) -> StateMatrix:
    """Random square state of the given Schmidt rank (exactly singular)."""
    p = floored_spectrum(rng, rank, floor)
    u = random_unitary(rng, n)
    v = random_unitary(rng, n)
    x = (u[:, :rank] * np.sqrt(p)) @ v[:rank, :]
    return StateMatrix.normalized(x)


def random_tangent(rng: np.random.Generator, x: StateMatrix) -> np.ndarray:
    """Unit direction orthogonal to x in the full matrix space."""
    g = rng.standard_normal(x.matrix.shape) + 1j * rng.standard_normal(x.matrix.shape)
    g = g - hs_inner(g, x.matrix) * x.matrix
    return g / np.linalg.norm(g)


def random_kernel_free_tangent(rng: np.random.Generator, x: StateMatrix) -> np.ndarray:
    """Unit tangent whose kernel-kernel block vanishes in the frame of x."""
    g = rng.standard_normal(x.matrix.shape) + 1j * rng.standard_normal(x.matrix.shape)
    gt = x.rotate(g)
    gt[x.rank:, x.rank:] = 0.0
    g = x.rotate_back(gt)
    g = g - hs_inner(g, x.matrix) * x.matrix
    return g / np.linalg.norm(g)


def random_hermitian_traceless(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit-norm Hermitian traceless matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 0.5 * (z + z.conj().T)
    h = h - (np.trace(h) / n) * np.eye(n)
    return h / np.linalg.norm(h)
