"""Subspaces of bipartite state matrices and channel ingestion.

A subspace is an orthonormal list of n x m complex matrices under the
Hilbert-Schmidt inner product.  Channels arrive as Kraus lists, get stacked
into a Stinespring isometry, and turn into the output subspace whose minimum
entanglement entropy is the channel's minimum entropy output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .derivatives import StateLike, StateMatrix, as_state
from .matrices import as_matrix, frob_norm, hs_inner, kron, matrix_from_json, matrix_to_json

GRAM_TOL = 1e-11
MEMBERSHIP_TOL = 1e-10
ISOMETRY_TOL = 1e-8


@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis of a subspace of C^{n x m}."""

    n: int
    m: int
    basis: np.ndarray = field(repr=False)   # shape (dim, n, m)

    def __post_init__(self) -> None:
        b = np.asarray(self.basis, dtype=np.complex128)
        if b.ndim != 3 or b.shape[1:] != (self.n, self.m):
            raise ValueError(f"basis shape {b.shape} does not match ambient ({self.n}, {self.m})")
        if b.shape[0] > self.n * self.m:
            raise ValueError(f"dimension {b.shape[0]} exceeds ambient {self.n * self.m}")
        if b.shape[0]:
            gram = np.einsum("anm,bnm->ab", b, b.conj())
            dev = float(np.abs(gram - np.eye(b.shape[0])).max())
            if dev > GRAM_TOL:
                raise ValueError(f"basis is not orthonormal: Gram deviation {dev:.3e}")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coefficients(self, mat: np.ndarray) -> np.ndarray:
        """Expansion coefficients of a matrix against the basis."""
        return np.einsum("nm,anm->a", np.asarray(mat, dtype=np.complex128), self.basis.conj())

    def combine(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("a,anm->nm", np.asarray(coeffs, dtype=np.complex128), self.basis)

    def project(self, mat: np.ndarray) -> np.ndarray:
        return self.combine(self.coefficients(mat))

    def membership_residual(self, mat: np.ndarray) -> float:
        return frob_norm(np.asarray(mat) - self.project(mat))

    def contains(self, mat: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.membership_residual(mat) <= tol * max(1.0, frob_norm(mat))


def orthonormalize(mats, drop_tol: float = 1e-10) -> Subspace:
    """Stabilized Gram-Schmidt with re-orthogonalization.

    Input order is preserved; elements whose residual drops below
    ``drop_tol`` times their original norm (duplicates, near-linear
    dependence) are dropped.
    """
    mats = [as_matrix(m, f"basis element {i}") for i, m in enumerate(mats)]
    if not mats:
        raise ValueError("empty basis list")
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise ValueError("basis elements must share one shape")
    accepted: list[np.ndarray] = []
    for m in mats:
        norm0 = frob_norm(m)
        if norm0 == 0.0:
            continue
        v = m.copy()
        for _ in range(2):
            for b in accepted:
                v -= hs_inner(v, b) * b
        nrm = frob_norm(v)
        if nrm <= drop_tol * norm0:
            continue
        accepted.append(v / nrm)
    if not accepted:
        raise ValueError("input spans only the zero space")
    return Subspace(n=shape[0], m=shape[1], basis=np.stack(accepted))


def complement(space: Subspace, x: StateLike) -> Subspace:
    """Orthonormal basis of the directions in the subspace orthogonal to x."""
    x = as_state(x)
    coeffs = space.coefficients(x.matrix)
    residual = frob_norm(x.matrix - space.combine(coeffs))
    if residual > MEMBERSHIP_TOL:
        raise ValueError(f"state is not in the subspace (residual {residual:.3e})")
    d = space.dim
    if d == 1:
        return Subspace(n=space.n, m=space.m, basis=np.zeros((0, space.n, space.m), dtype=np.complex128))
    # Null space of the single linear condition <y, x> = 0 in coefficient space.
    _, _, vh = np.linalg.svd(coeffs.conj()[None, :])
    kernel = vh[1:].conj()
    basis = np.einsum("ka,anm->knm", kernel, space.basis)
    return Subspace(n=space.n, m=space.m, basis=basis)


def tensor(first: Subspace, second: Subspace) -> Subspace:
    """Tensor-product subspace with the basis of all Kronecker pairs."""
    basis = np.stack([kron(a, b) for a in first.basis for b in second.basis])
    return Subspace(n=first.n * second.n, m=first.m * second.m, basis=basis)


@dataclass(frozen=True)
class OperatorSchmidt:
    """Expansion y = sum_l c_l A_l (x) B_l with orthonormal factor pairs."""

    coefficients: np.ndarray            # descending, positive
    factors_first: np.ndarray           # (L, n1, m1)
    factors_second: np.ndarray          # (L, n2, m2)

    def reassemble(self) -> np.ndarray:
        terms = [
            c * kron(a, b)
            for c, a, b in zip(self.coefficients, self.factors_first, self.factors_second)
        ]
        return sum(terms)


def _fix_factor_phase(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Make the leading significant entry of the first factor real positive."""
    flat = a.ravel()
    idx = np.argmax(np.abs(flat) > 1e-12 * np.abs(flat).max()) if flat.size else 0
    pivot = flat[idx]
    if pivot == 0:
        return a, b
    phase = pivot / abs(pivot)
    return a / phase, b * phase


def operator_schmidt(y: np.ndarray, dims: tuple[int, int, int, int]) -> OperatorSchmidt:
    """Operator Schmidt decomposition via the realignment map.

    ``dims = (n1, m1, n2, m2)`` factor the shape of y as (n1 n2) x (m1 m2).
    The realigned matrix R[(i1, j1), (i2, j2)] = y[(i1, i2), (j1, j2)] has
    rank-one terms exactly at the Kronecker factors, so its SVD is the
    decomposition.
    """
    y = as_matrix(y, "direction")
    n1, m1, n2, m2 = dims
    if y.shape != (n1 * n2, m1 * m2):
        raise ValueError(f"shape {y.shape} does not factor as {dims}")
    realigned = y.reshape(n1, n2, m1, m2).transpose(0, 2, 1, 3).reshape(n1 * m1, n2 * m2)
    u, s, vh = np.linalg.svd(realigned, full_matrices=False)
    keep = s > 1e-13 * max(s[0], 1e-300)
    firsts, seconds = [], []
    for idx in np.nonzero(keep)[0]:
        a = u[:, idx].reshape(n1, m1)
        b = vh[idx].reshape(n2, m2)
        a, b = _fix_factor_phase(a, b)
        firsts.append(a)
        seconds.append(b)
    return OperatorSchmidt(
        coefficients=s[keep],
        factors_first=np.array(firsts).reshape(-1, n1, m1),
        factors_second=np.array(seconds).reshape(-1, n2, m2),
    )


@dataclass(frozen=True)
class DirectionDecomposition:
    """Split of a product-orthogonal direction into its three channels.

    y = c1 * x1 (x) second + c2 * first (x) x2 + c3 * cross with nonnegative
    coefficients, ``second`` orthogonal to x2, ``first`` orthogonal to x1 and
    the cross term living in the product of both orthogonal complements.
    """

    c1: float
    c2: float
    c3: float
    second_factor: np.ndarray | None
    first_factor: np.ndarray | None
    cross: np.ndarray | None
    cross_schmidt: OperatorSchmidt | None
    dims: tuple[int, int, int, int]

    def reassemble(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        n1, m1, n2, m2 = self.dims
        out = np.zeros((n1 * n2, m1 * m2), dtype=np.complex128)
        if self.second_factor is not None:
            out += self.c1 * kron(x1, self.second_factor)
        if self.first_factor is not None:
            out += self.c2 * kron(self.first_factor, x2)
        if self.cross is not None:
            out += self.c3 * self.cross
        return out


def split_direction(y: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> DirectionDecomposition:
    """Decompose y orthogonal to x1 (x) x2 into its three tensor channels."""
    x1 = as_matrix(x1, "first factor state")
    x2 = as_matrix(x2, "second factor state")
    y = as_matrix(y, "direction")
    n1, m1 = x1.shape
    n2, m2 = x2.shape
    if y.shape != (n1 * n2, m1 * m2):
        raise ValueError(f"direction shape {y.shape} does not match factors {(n1, m1, n2, m2)}")
    overlap = hs_inner(y, kron(x1, x2))
    if abs(overlap) > 1e-10 * max(1.0, frob_norm(y)):
        raise ValueError(f"direction not orthogonal to the product state: {overlap:.3e}")
    y4 = y.reshape(n1, n2, m1, m2)
    t2 = np.einsum("ab,aibj->ij", x1.conj(), y4)
    t1 = np.einsum("ab,iajb->ij", x2.conj(), y4)
    cross = y - kron(x1, t2) - kron(t1, x2)

    def _norm_pair(mat: np.ndarray) -> tuple[float, np.ndarray | None]:
        c = frob_norm(mat)
        if c <= 1e-12:
            return 0.0, None
        return c, mat / c

    c1, second = _norm_pair(t2)
    c2, first = _norm_pair(t1)
    c3, cross_n = _norm_pair(cross)
    schmidt = operator_schmidt(cross_n, (n1, m1, n2, m2)) if cross_n is not None else None
    return DirectionDecomposition(
        c1=c1, c2=c2, c3=c3,
        second_factor=second, first_factor=first,
        cross=cross_n, cross_schmidt=schmidt,
        dims=(n1, m1, n2, m2),
    )


@dataclass(frozen=True)
class BlockwiseBasis:
    """Basis of a subspace filtered by block patterns at a singular state.

    All matrices are expressed in the rotated frame where the state is
    [[x11, 0], [0, 0]].  The four groups extend each other: ``diag_like``
    spans the [[*, 0], [0, 0]] pattern (the state itself comes first),
    ``upper`` extends to [[*, *], [0, 0]], ``lower`` to [[*, *], [*, 0]] and
    ``kernel`` completes the space.
    """

    rank: int
    diag_like: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    kernel: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (
            self.diag_like.shape[0],
            self.upper.shape[0],
            self.lower.shape[0],
            self.kernel.shape[0],
        )


def _pattern_outside(n: int, m: int, rank: int, level: int) -> np.ndarray:
    """Boolean mask of entries a level-``level`` pattern must keep zero."""
    rows = np.arange(n)[:, None] >= rank
    cols = np.arange(m)[None, :] >= rank
    if level == 1:
        return rows | cols
    if level == 2:
        return np.broadcast_to(rows, (n, m)).copy()
    if level == 3:
        return rows & cols
    return np.zeros((n, m), dtype=bool)


def _extend_orthonormal(current: list[np.ndarray], candidates: np.ndarray, tol: float = 1e-9) -> list[np.ndarray]:
    """Columns of ``candidates`` orthogonalized against ``current``, appended."""
    added = []
    for vec in candidates.T:
        v = vec.copy()
        for _ in range(2):
            for b in current + added:
                v -= np.vdot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm > tol:
            added.append(v / nrm)
    return added


def blockwise_basis(space: Subspace, x: StateLike) -> BlockwiseBasis:
    """Reorganize the basis of a subspace by block patterns of a singular x."""
    x = as_state(x)
    n, m = space.n, space.m
    if x.matrix.shape != (n, m):
        raise ValueError("state shape does not match the subspace ambient")
    if x.rank == min(n, m) and n == m:
        raise ValueError("state is not singular; blockwise filtration is trivial")
    coeffs = space.coefficients(x.matrix)
    if frob_norm(x.matrix - space.combine(coeffs)) > MEMBERSHIP_TOL:
        raise ValueError("state is not in the subspace")
    rank = x.rank
    rotated = np.einsum("ij,ajk,kl->ail", x.left.conj().T, space.basis, x.right.conj().T)
    d = space.dim

    def _null_space(level: int) -> np.ndarray:
        outside = _pattern_outside(n, m, rank, level)
        if not outside.any():
            return np.eye(d, dtype=np.complex128)
        constraint = rotated[:, outside].T   # rows: outside entries, cols: basis index
        u, s, vh = np.linalg.svd(constraint, full_matrices=True)
        null_dim = d - int(np.count_nonzero(s > 1e-10 * max(1.0, s[0] if len(s) else 0.0)))
        if null_dim == 0:
            return np.zeros((d, 0), dtype=np.complex128)
        return vh[d - null_dim:].conj().T

    groups: list[list[np.ndarray]] = []
    chosen: list[np.ndarray] = []
    # The state itself leads the first group.
    c_unit = coeffs / np.linalg.norm(coeffs)
    for level in (1, 2, 3, 4):
        null = _null_space(level)
        if level == 1:
            proj = null @ (null.conj().T @ c_unit)
            if np.linalg.norm(proj - c_unit) > 1e-8:
                raise ValueError("state does not fit the [[*, 0], [0, 0]] pattern of its own frame")
            added = [c_unit] + _extend_orthonormal([c_unit], null)
        else:
            added = _extend_orthonormal(chosen, null)
        groups.append(added)
        chosen = chosen + added

    def _stack(vectors: list[np.ndarray]) -> np.ndarray:
        if not vectors:
            return np.zeros((0, n, m), dtype=np.complex128)
        return np.einsum("ka,anm->knm", np.stack(vectors), rotated)

    return BlockwiseBasis(
        rank=rank,
        diag_like=_stack(groups[0]),
        upper=_stack(groups[1]),
        lower=_stack(groups[2]),
        kernel=_stack(groups[3]),
        left=x.left,
        right=x.right,
    )


def random_subspace(n: int, m: int, dim: int, seed) -> Subspace:
    """Span of ``dim`` iid complex Gaussian matrices, orthonormalized."""
    if not 1 <= dim <= n * m:
        raise ValueError(f"dim must be in [1, {n * m}], got {dim}")
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((dim, n, m)) + 1j * rng.standard_normal((dim, n, m))
    space = orthonormalize(list(draws))
    if space.dim != dim:
        raise ValueError("degenerate random draw (this should never happen)")
    return space


def haar_state(space: Subspace, rng: np.random.Generator) -> StateMatrix:
    """Haar-random unit element of the subspace."""
    c = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
    return StateMatrix.normalized(space.combine(c / np.linalg.norm(c)))


# ---------------------------------------------------------------------------
# Channels


@dataclass(frozen=True)
class ChannelIsometry:
    """Stinespring isometry restricted to the fixed environment slice."""

    matrix: np.ndarray   # (d_out * d_env) x d_in
    d_out: int
    d_env: int

    def __post_init__(self) -> None:
        v = as_matrix(self.matrix, "isometry")
        if v.shape[0] != self.d_out * self.d_env:
            raise ValueError(f"isometry rows {v.shape[0]} != d_out * d_env = {self.d_out * self.d_env}")
        dev = float(np.abs(v.conj().T @ v - np.eye(v.shape[1])).max())
        if dev > ISOMETRY_TOL:
            raise ValueError(f"not an isometry: max |V*V - I| = {dev:.3e}")
        object.__setattr__(self, "matrix", v)

    @property
    def d_in(self) -> int:
        return self.matrix.shape[1]


def kraus_to_isometry(kraus: list[np.ndarray]) -> ChannelIsometry:
    """Stack Kraus operators into an isometry; validates completeness."""
    if not kraus:
        raise ValueError("empty Kraus list")
    ops = [as_matrix(k, f"Kraus operator {i}") for i, k in enumerate(kraus)]
    d_out, d_in = ops[0].shape
    for k in ops:
        if k.shape != (d_out, d_in):
            raise ValueError("Kraus operators must share one shape")
    total = sum(k.conj().T @ k for k in ops)
    dev = float(np.abs(total - np.eye(d_in)).max())
    if dev > ISOMETRY_TOL:
        raise ValueError(f"Kraus completeness violated: max |sum K*K - I| = {dev:.3e}")
    stacked = np.stack(ops, axis=1).reshape(d_out * len(ops), d_in)
    return ChannelIsometry(matrix=stacked, d_out=d_out, d_env=len(ops))


def channel_to_subspace(isometry: ChannelIsometry) -> Subspace:
    """Output subspace of a channel: isometry columns as d_out x d_env matrices."""
    cols = [
        isometry.matrix[:, j].reshape(isometry.d_out, isometry.d_env)
        for j in range(isometry.d_in)
    ]
    return orthonormalize(cols)


def apply_channel(kraus: list[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Direct channel action sum_e K_e rho K_e* (oracle-grade, no subspaces)."""
    rho = as_matrix(rho, "input state")
    return sum(k @ rho @ k.conj().T for k in kraus)


# ---------------------------------------------------------------------------
# File formats


def subspace_to_json(space: Subspace) -> dict:
    return {
        "n": space.n,
        "m": space.m,
        "basis": [matrix_to_json(b) for b in space.basis],
    }


def subspace_from_json(obj: dict) -> Subspace:
    basis = [matrix_from_json(b) for b in obj["basis"]]
    if not basis:
        raise ValueError("subspace file has an empty basis")
    return Subspace(n=int(obj["n"]), m=int(obj["m"]), basis=np.stack(basis))


def load_subspace(path) -> Subspace:
    with open(path) as fh:
        return subspace_from_json(json.load(fh))


def save_subspace(path, space: Subspace) -> None:
    Path(path).write_text(json.dumps(subspace_to_json(space)))


def load_kraus(path) -> list[np.ndarray]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("Kraus file must contain a JSON list of matrices")
    return [matrix_from_json(obj) for obj in data]


def save_kraus(path, kraus: list[np.ndarray]) -> None:
    Path(path).write_text(json.dumps([matrix_to_json(k) for k in kraus]))
