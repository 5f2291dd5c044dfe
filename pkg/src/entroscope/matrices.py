"""Dense complex linear algebra primitives shared by the whole package.

Everything operates on plain ``numpy`` complex arrays.  Matrices are stored
row-major, tensor products use the standard lexicographic index order
(``kron(A, B)`` row index ``i1*n2 + i2``), and all logarithms are natural
(entropies in nats; unit conversion happens only at report time).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Kernel detection: singular values / eigenvalues below RANK_TOL * largest
# are treated as exact zeros everywhere in the package.
RANK_TOL = 1e-10

HERMITIAN_TOL = 1e-12


class SingularLogError(ValueError):
    """Logarithm requested on a singular operator without kernel masking."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce input to a finite 2-D complex array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(a b*), conjugate-linear in b."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(b, a))


def frob_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-system of a Hermitian matrix, eigenvalues descending."""

    eigenvalues: np.ndarray   # real, descending
    basis: np.ndarray         # unitary, eigenvectors in columns

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.conj().T


@dataclass(frozen=True)
class SvdDecomposition:
    """Singular value decomposition ``u @ diag(s) @ right`` of the input."""

    left: np.ndarray            # unitary u
    singular_values: np.ndarray  # descending, nonnegative
    right: np.ndarray           # unitary factor applied on the right (vh)

    def reconstruct(self) -> np.ndarray:
        k = len(self.singular_values)
        return (self.left[:, :k] * self.singular_values) @ self.right[:k, :]


def herm_eig(h, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix; rejects non-Hermitian input."""
    h = as_matrix(h, "hermitian matrix")
    if h.shape[0] != h.shape[1]:
        raise ValueError(f"hermitian matrix must be square, got {h.shape}")
    scale = max(1.0, float(np.abs(h).max()))
    dev = float(np.abs(h - h.conj().T).max())
    if dev > tol * scale:
        raise ValueError(f"matrix is not Hermitian: max |H - H*| = {dev:.3e}")
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")   # descending, ties keep input order
    return SpectralDecomposition(eigenvalues=w[order], basis=v[:, order])


def svd(x) -> SvdDecomposition:
    """Full SVD with singular values sorted descending (numpy convention)."""
    x = as_matrix(x)
    u, s, vh = np.linalg.svd(x, full_matrices=True)
    return SvdDecomposition(left=u, singular_values=s, right=vh)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with row-major lexicographic block layout."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m, side: str, dims: tuple[int, int, int, int]) -> np.ndarray:
    """Trace out one tensor factor of an (n1*n2) x (m1*m2) matrix.

    ``dims = (n1, m1, n2, m2)`` declares the factor shapes.  ``side="first"``
    traces the n1 x m1 factor (requires n1 == m1) and returns an n2 x m2
    matrix; ``side="second"`` is symmetric.
    """
    m = as_matrix(m)
    n1, m1, n2, m2 = dims
    if m.shape != (n1 * n2, m1 * m2):
        raise ValueError(f"matrix shape {m.shape} does not factor as {dims}")
    blocks = m.reshape(n1, n2, m1, m2)
    if side == "first":
        if n1 != m1:
            raise ValueError("cannot trace a non-square first factor")
        return np.einsum("aiaj->ij", blocks)
    if side == "second":
        if n2 != m2:
            raise ValueError("cannot trace a non-square second factor")
        return np.einsum("iaja->ij", blocks)
    raise ValueError(f"side must be 'first' or 'second', got {side!r}")


def log_psd(rho, mask_kernel: bool = False) -> np.ndarray:
    """Matrix logarithm of a Hermitian PSD matrix.

    With ``mask_kernel`` the logarithm on the kernel is replaced by zero, so
    entropy-style traces pick up the 0*log(0) = 0 convention.  Without it a
    singular input raises :class:`SingularLogError`.
    """
    dec = herm_eig(rho)
    w = dec.eigenvalues
    if w[-1] < -1e-12 * max(1.0, abs(w[0])):
        raise ValueError(f"matrix is not PSD: min eigenvalue {w[-1]:.3e}")
    cut = RANK_TOL * max(w[0], 0.0)
    kernel = w <= cut
    if kernel.any() and not mask_kernel:
        raise SingularLogError(
            f"singular operator ({int(kernel.sum())} kernel eigenvalue(s)); "
            "pass mask_kernel=True for the masked logarithm"
        )
    logs = np.zeros_like(w)
    np.log(w, out=logs, where=~kernel)
    return (dec.basis * logs) @ dec.basis.conj().T


def matrix_to_json(m: np.ndarray) -> dict:
    """Serialize to the repo-wide matrix format (row-major [re, im] pairs)."""
    m = as_matrix(m)
    data = [[float(z.real), float(z.imag)] for z in m.ravel()]
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": data}


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = obj["data"]
    if len(data) != rows * cols:
        raise ValueError(f"matrix data has {len(data)} entries, expected {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return as_matrix(flat.reshape(rows, cols))


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(path, m: np.ndarray) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m)))
