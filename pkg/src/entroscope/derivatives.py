"""Entanglement entropy of bipartite states and its exact directional derivatives.

A unit-norm n x m complex matrix x represents a bipartite pure state with
reduced density matrix xx* and entanglement entropy

    E(x) = -Tr(xx* log xx*).

Moving inside a subspace along a unit direction y with Tr(xy*) = 0 traces the
normalized curve (x + t y) / sqrt(1 + t^2), and the first and second
derivatives of E along that curve have closed forms in the Schmidt basis of
x.  With rho = xx* = diag(p_1, ..., p_n) nonsingular,

    D1 = -Tr(g0 log rho),                        g0 = xy* + yx*,
    D2 = -2 ( Tr[g1 log rho]
              + sum_jk (log p_j - log p_k) / (2 (p_j - p_k)) |g0_jk|^2 ),

with g1 = yy* - xx* and the confluent value 1/(2 p_j) on coincident
eigenvalues.  An equivalent split D2 = 2 (log_term - hadamard_term) expresses
the second derivative through Hadamard-product quadratic forms with the
weight functions implemented here (``curvature_weight`` and its plus/minus
average), which is what makes tensor-product subadditivity arguments work.

When x is rank deficient the second derivative stays finite exactly when the
direction has no component in the kernel-kernel block after rotating x to
diagonal form; otherwise the entropy curve behaves like -K t^2 log t^2 with
K the squared norm of that block, and D2 = +infinity.  The finite case has a
closed form assembled from the leading r x r block plus a cross term, and it
matches the limit of the derivative at the regularized state ``regularize(x,
eps)`` as eps -> 0.  ``second_derivative`` dispatches between all branches
and never raises.

All derivative formulas are evaluated after rotating the pair (x, y) by the
SVD unitaries of x, so x is diagonal with Schmidt values descending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .matrices import (
    RANK_TOL,
    SingularLogError,
    as_matrix,
    frob_norm,
    herm_eig,
    hs_inner,
    log_psd,
)

# Orthogonality / unit-norm tolerances for (state, direction) pairs.
ORTHO_TOL = 1e-10
NORM_TOL = 1e-10

# Divergence test: the second derivative is tagged +infinity when the
# kernel-kernel block of the direction has squared norm above this.
DIVERGENCE_TOL = 1e-12

# Switch to the series form of the weight functions near the removable
# points r = +-1, where the raw closed form loses about half the digits.
_WEIGHT_SERIES_TOL = 1e-6

BRANCH_NONSINGULAR = "nonsingular"
BRANCH_SINGULAR_FINITE = "singular_finite"
BRANCH_SINGULAR_DIVERGENT = "singular_divergent"


class StateMatrix:
    """Unit-Frobenius-norm complex matrix with cached Schmidt data."""

    __slots__ = ("matrix", "left", "schmidt", "right", "probs", "rank")

    def __init__(self, matrix) -> None:
        m = as_matrix(matrix, "state")
        norm2 = float(np.vdot(m, m).real)
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"state must have unit Frobenius norm, got |x|^2 = {norm2!r}")
        self.matrix = m
        u, s, vh = np.linalg.svd(m, full_matrices=True)
        self.left = u
        self.schmidt = s
        self.right = vh
        self.probs = s * s
        self.rank = int(np.count_nonzero(s > RANK_TOL * s[0]))

    @classmethod
    def normalized(cls, matrix) -> "StateMatrix":
        m = as_matrix(matrix, "state")
        nrm = frob_norm(m)
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero matrix")
        return cls(m / nrm)

    @property
    def nrows(self) -> int:
        return self.matrix.shape[0]

    @property
    def ncols(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    @property
    def is_full_rank(self) -> bool:
        return self.rank == min(self.matrix.shape)

    def rotate(self, y: np.ndarray) -> np.ndarray:
        """Express a direction in the Schmidt frame of this state."""
        return self.left.conj().T @ np.asarray(y, dtype=np.complex128) @ self.right.conj().T

    def rotate_back(self, y: np.ndarray) -> np.ndarray:
        return self.left @ np.asarray(y, dtype=np.complex128) @ self.right


StateLike = Union[StateMatrix, np.ndarray]


def as_state(x: StateLike) -> StateMatrix:
    return x if isinstance(x, StateMatrix) else StateMatrix(x)


def check_direction(x: StateLike, y: np.ndarray, *, unit: bool = True) -> np.ndarray:
    """Validate a tangent direction: orthogonal to x and (optionally) unit norm."""
    x = as_state(x)
    y = as_matrix(y, "direction")
    if y.shape != x.matrix.shape:
        raise ValueError(f"direction shape {y.shape} does not match state {x.matrix.shape}")
    ov = hs_inner(x.matrix, y)
    if abs(ov) > ORTHO_TOL:
        raise ValueError(f"direction not orthogonal to state: Tr(x y*) = {ov:.3e}")
    if unit:
        n2 = float(np.vdot(y, y).real)
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValueError(f"direction must be unit norm, got |y|^2 = {n2!r}")
    return y


@dataclass(frozen=True)
class DirectionPair:
    """A (state, direction) pair with its curve coefficients.

    gamma0 = xy* + yx* and gamma1 = yy* - xx* drive the expansion
    rho(t) = rho + t gamma0 + t^2 gamma1 of the curve density matrix.  The
    Hermitian halves w = (y + y*)/2 and z = i(y - y*)/2 are taken after
    zero-padding to the max(n, m) square (they need y* of the same shape).
    """

    state: StateMatrix
    direction: np.ndarray
    gamma0: np.ndarray
    gamma1: np.ndarray
    w: np.ndarray
    z: np.ndarray

    @classmethod
    def build(cls, x: StateLike, y: np.ndarray) -> "DirectionPair":
        x = as_state(x)
        y = check_direction(x, y)
        xm = x.matrix
        g0 = xm @ y.conj().T + y @ xm.conj().T
        g1 = y @ y.conj().T - xm @ xm.conj().T
        ye = _embed_square(y)
        w = 0.5 * (ye + ye.conj().T)
        z = 0.5j * (ye - ye.conj().T)
        return cls(state=x, direction=y, gamma0=g0, gamma1=g1, w=w, z=z)


def _embed_square(y: np.ndarray) -> np.ndarray:
    n, m = y.shape
    if n == m:
        return y
    big = max(n, m)
    out = np.zeros((big, big), dtype=np.complex128)
    out[:n, :m] = y
    return out


def _masked_entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64)
    pos = p > 0.0
    return float(-np.sum(p[pos] * np.log(p[pos])))


def entropy(x: StateLike) -> float:
    """E(x) = -Tr(xx* log xx*) from the Schmidt spectrum, 0 log 0 = 0."""
    if isinstance(x, StateMatrix):
        return _masked_entropy(x.probs)
    s = np.linalg.svd(as_matrix(x), compute_uv=False)
    return _masked_entropy(s * s)


def curve_entropy(x: StateLike, y: np.ndarray, t: float) -> float:
    """Entropy along the normalized curve (x + t y) / |x + t y|."""
    x = as_state(x)
    m = x.matrix + t * np.asarray(y, dtype=np.complex128)
    m = m / frob_norm(m)
    return entropy(m)


def affine_split_check(x: StateLike, y: np.ndarray, t: float) -> tuple[float, float]:
    """Both sides of the affine comparison of the curve entropy.

    Returns (S(rho(t)), S(sigma(t)) - t^2 Tr[gamma1 log rho]) for the exact
    curve density rho(t) and the affine family sigma(t) = rho + t gamma0.
    The two sides agree up to O(t^3).  Requires rho = xx* nonsingular.
    """
    x = as_state(x)
    if x.rank < x.nrows:
        raise SingularLogError("affine comparison needs a nonsingular reduced state")
    y = check_direction(x, y)
    lhs = curve_entropy(x, y, t)
    pair = DirectionPair.build(x, y)
    rho = x.matrix @ x.matrix.conj().T
    sigma_eigs = np.linalg.eigvalsh(rho + t * pair.gamma0)
    if sigma_eigs[0] <= 0.0:
        raise ValueError(f"t = {t} too large: sigma(t) has eigenvalue {sigma_eigs[0]:.3e}")
    s_sigma = float(-np.sum(sigma_eigs * np.log(sigma_eigs)))
    corr = float(np.trace(pair.gamma1 @ log_psd(rho)).real)
    return lhs, s_sigma - t * t * corr


# ---------------------------------------------------------------------------
# Hadamard weight functions


def curvature_weight(r):
    """Weight (r+1)/(r-1) * log|r| entering the second-derivative form.

    Defined for real r != 0, with the removable values 2 at r = 1 and 0 at
    r = -1.  Near +-1 a short series replaces the closed form.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r == 0.0):
        raise ValueError("curvature weight undefined at r = 0")
    out = np.empty_like(r)
    u = r - 1.0
    w = -r - 1.0
    near_pos = np.abs(u) < _WEIGHT_SERIES_TOL
    near_neg = np.abs(w) < _WEIGHT_SERIES_TOL
    generic = ~(near_pos | near_neg)
    # log|r| through log1p keeps full relative accuracy down to the series cut
    gap = np.where(r > 0.0, u, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[generic] = ((r + 1.0) / u * np.log1p(gap))[generic]
    out[near_pos] = (2.0 + u * u / 6.0 - u**3 / 6.0)[near_pos]
    out[near_neg] = (w * w / 2.0 - w**3 / 2.0)[near_neg]
    if out.ndim == 0:
        return float(out)
    return out


def curvature_weight_avg(r):
    """Average of the weight at +r and -r; equals 1 exactly at r = +-1."""
    r = np.asarray(r, dtype=np.float64)
    out = 0.5 * (curvature_weight(r) + curvature_weight(-r))
    if np.ndim(out) == 0:
        return float(out)
    return out


def weight_subadditivity_gap(r: float, s: float) -> float:
    """Slack of the weight subadditivity bound at the pair (r, s).

    Returns avg(r) + avg(s) - weight(r*s), which is nonnegative with
    equality exactly on the diagonal r = s.
    """
    if r == 0.0 or s == 0.0:
        raise ValueError("arguments must be nonzero")
    return float(curvature_weight_avg(r) + curvature_weight_avg(s) - curvature_weight(r * s))


@dataclass(frozen=True)
class CurvatureWeights:
    """Weight matrices over the Schmidt ratio grid r_jk = sqrt(p_j / p_k)."""

    ratios: np.ndarray
    plus: np.ndarray    # weight(r_jk); 2 on the diagonal
    minus: np.ndarray   # weight(-r_jk); 0 on the diagonal
    avg: np.ndarray     # averaged weight; 1 on the diagonal


def hadamard_weights(p: Sequence[float]) -> CurvatureWeights:
    """Build the Hadamard-multiplier weight matrices for a positive spectrum."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or np.any(p <= 0.0):
        raise ValueError("spectrum must be a 1-D array of positive numbers")
    ratios = np.sqrt(np.outer(p, 1.0 / p))
    plus = curvature_weight(ratios)
    minus = curvature_weight(-ratios)
    return CurvatureWeights(ratios=ratios, plus=plus, minus=minus, avg=0.5 * (plus + minus))


# ---------------------------------------------------------------------------
# Derivatives


def _log_ratio_coeff(p: np.ndarray) -> np.ndarray:
    """Coefficients (log p_j - log p_k) / (2 (p_j - p_k)), confluent 1/(2 p_j).

    Close eigenvalue pairs go through log1p to avoid cancellation; far pairs
    use the plain log difference, which is the accurate form there (and the
    log1p argument can round to -1 when the ratio is below float precision).
    """
    delta = p[:, None] - p[None, :]
    logp = np.log(p)
    near = np.abs(delta) < 0.5 * p[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        close = np.log1p(delta / p[None, :]) / (2.0 * delta)
        far = (logp[:, None] - logp[None, :]) / (2.0 * delta)
        coeff = np.where(near, close, far)
    confluent = delta == 0.0
    if confluent.any():
        fill = np.broadcast_to((0.5 / p)[:, None], coeff.shape)
        coeff = np.where(confluent, fill, coeff)
    return coeff


def _rotated_gamma0(p_top: np.ndarray, y_block: np.ndarray) -> np.ndarray:
    s = np.sqrt(p_top)
    return s[:, None] * y_block.conj().T + y_block * s[None, :]


def _d1_rotated(p: np.ndarray, rank: int, yt: np.ndarray) -> float:
    ptop = p[:rank]
    diag = np.real(np.diagonal(yt)[:rank])
    return float(-2.0 * np.sum(np.sqrt(ptop) * diag * np.log(ptop)))


def _criticality_rotated(p: np.ndarray, rank: int, yt: np.ndarray) -> float:
    ptop = p[:rank]
    diag = np.conj(np.diagonal(yt)[:rank])
    return float(abs(np.sum(np.sqrt(ptop) * diag * np.log(ptop))))


def _kernel_block_norm2(rank: int, yt: np.ndarray) -> float:
    block = yt[rank:, rank:]
    if block.size == 0:
        return 0.0
    return float(np.vdot(block, block).real)


def first_derivative(x: StateLike, y: np.ndarray) -> float:
    """D1 along y: -Tr(gamma0 log rho) evaluated in the Schmidt frame.

    For a rank-deficient x the kernel rows carry no gamma0 diagonal and the
    masked sum is the true derivative, but a direction with weight in the
    kernel-kernel block is rejected; ``second_derivative`` is the total
    entry point for those.
    """
    x = as_state(x)
    y = check_direction(x, y)
    yt = x.rotate(y)
    r = x.rank
    if r < min(x.nrows, x.ncols) and _kernel_block_norm2(r, yt) > DIVERGENCE_TOL:
        raise SingularLogError(
            "state is singular and the direction feeds its kernel; "
            "use second_derivative for the dispatching entry point"
        )
    return _d1_rotated(x.probs, r, yt)


def _d2_full_rank_rotated(p: np.ndarray, yt: np.ndarray) -> float:
    n = len(p)
    logp = np.log(p)
    row2 = np.sum(np.abs(yt) ** 2, axis=1)
    t1 = float(np.sum((row2 - p) * logp))
    g0 = _rotated_gamma0(p, yt[:, :n])
    q = float(np.sum(_log_ratio_coeff(p) * np.abs(g0) ** 2))
    return -2.0 * (t1 + q)


def second_derivative_full_rank(x: StateLike, y: np.ndarray) -> float:
    """D2 along y when rho = xx* is nonsingular (all p_j above rank tolerance)."""
    x = as_state(x)
    y = check_direction(x, y)
    if x.rank < x.nrows:
        raise SingularLogError(
            f"reduced state is singular (rank {x.rank} of {x.nrows}); "
            "use second_derivative"
        )
    return _d2_full_rank_rotated(x.probs, x.rotate(y))


def _d2_singular_finite_rotated(p: np.ndarray, rank: int, yt: np.ndarray) -> float:
    """Finite-case closed form: leading-block terms plus the kernel cross term."""
    ptop = p[:rank]
    logp = np.log(ptop)
    y11 = yt[:rank, :rank]
    y12 = yt[:rank, rank:]
    y21 = yt[rank:, :rank]
    g0 = _rotated_gamma0(ptop, y11)
    gsum = float(np.sum(np.abs(y11) ** 2 * logp[:, None]))
    gsum += float(np.sum(_log_ratio_coeff(ptop) * np.abs(g0) ** 2))
    core = -2.0 * (_masked_entropy(ptop) + gsum)
    cross = float(np.sum(np.abs(y12) ** 2 * logp[:, None]))
    cross += float(np.sum(np.abs(y21) ** 2 * logp[None, :]))
    return core - 2.0 * cross


@dataclass(frozen=True)
class SecondDerivativeParts:
    """Split D2 = 2 (log_term - hadamard_term) of the second derivative.

    hadamard_term is the weighted quadratic form Tr[w W+(w) + z W-(z)] over
    the Hermitian halves of the rotated direction; log_term collects
    -E(x) - Tr[(y*y + yy*) log xx*] / 2.
    """

    hadamard_term: float
    log_term: float
    value: float


def _parts_rotated(p: np.ndarray, yt: np.ndarray, ent: float) -> SecondDerivativeParts:
    w = 0.5 * (yt + yt.conj().T)
    z = 0.5j * (yt - yt.conj().T)
    weights = hadamard_weights(p)
    m_term = float(np.sum(np.abs(w) ** 2 * weights.plus) + np.sum(np.abs(z) ** 2 * weights.minus))
    logp = np.log(p)
    row2 = np.sum(np.abs(yt) ** 2, axis=1)
    col2 = np.sum(np.abs(yt) ** 2, axis=0)
    gamma = -ent - 0.5 * float(np.sum((row2 + col2) * logp))
    return SecondDerivativeParts(hadamard_term=m_term, log_term=gamma, value=2.0 * (gamma - m_term))


def second_derivative_parts(x: StateLike, y: np.ndarray) -> SecondDerivativeParts:
    """Hadamard / log split of D2 for a square nonsingular state."""
    x = as_state(x)
    if not x.is_square:
        raise ValueError("split form needs a square state; zero-pad the pair first")
    if x.rank < x.nrows:
        raise SingularLogError("split form needs a nonsingular reduced state")
    y = check_direction(x, y)
    return _parts_rotated(x.probs, x.rotate(y), _masked_entropy(x.probs))


@dataclass(frozen=True)
class DerivativeReport:
    """First/second directional derivative with branch bookkeeping.

    ``d2`` is None exactly when ``branch`` is the divergent one; +infinity is
    a tag, never a float that could leak into arithmetic.
    """

    d1: float
    d2: float | None
    branch: str
    criticality_residual: float
    divergence_coefficient: float
    hadamard_term: float | None = None
    log_term: float | None = None

    @property
    def is_divergent(self) -> bool:
        return self.branch == BRANCH_SINGULAR_DIVERGENT

    def d2_for_report(self) -> float:
        """Float view for report emission only (inf on the divergent branch)."""
        return math.inf if self.is_divergent else float(self.d2)


def second_derivative(x: StateLike, y: np.ndarray) -> DerivativeReport:
    """Total dispatcher for D2: nonsingular, singular finite, or divergent."""
    x = as_state(x)
    y = check_direction(x, y)
    yt = x.rotate(y)
    p = x.probs
    r = x.rank
    d1 = _d1_rotated(p, r, yt)
    crit = _criticality_rotated(p, r, yt)
    if x.is_square and r == x.nrows:
        parts = _parts_rotated(p, yt, _masked_entropy(p))
        return DerivativeReport(
            d1=d1,
            d2=_d2_full_rank_rotated(p, yt),
            branch=BRANCH_NONSINGULAR,
            criticality_residual=crit,
            divergence_coefficient=0.0,
            hadamard_term=parts.hadamard_term,
            log_term=parts.log_term,
        )
    coeff = _kernel_block_norm2(r, yt)
    if coeff > DIVERGENCE_TOL:
        return DerivativeReport(
            d1=d1,
            d2=None,
            branch=BRANCH_SINGULAR_DIVERGENT,
            criticality_residual=crit,
            divergence_coefficient=coeff,
        )
    return DerivativeReport(
        d1=d1,
        d2=_d2_singular_finite_rotated(p, r, yt),
        branch=BRANCH_SINGULAR_FINITE,
        criticality_residual=crit,
        divergence_coefficient=coeff,
    )


# ---------------------------------------------------------------------------
# Kernel blocks, regularization, divergence probe


@dataclass(frozen=True)
class KernelBlocks:
    """The pair (x, y) rotated so x = [[x11, 0], [0, 0]] with x11 = diag."""

    rank: int
    schmidt: np.ndarray
    x_rotated: np.ndarray
    y11: np.ndarray
    y12: np.ndarray
    y21: np.ndarray
    y22: np.ndarray
    divergence_coefficient: float   # Tr(y22 y22*)
    left: np.ndarray
    right: np.ndarray


def kernel_block_partition(x: StateLike, y: np.ndarray) -> KernelBlocks:
    """Rotate (x, y) to the Schmidt frame and slice y by the rank of x."""
    x = as_state(x)
    y = check_direction(x, y, unit=False)
    yt = x.rotate(y)
    r = x.rank
    xr = np.zeros_like(x.matrix)
    k = min(x.nrows, x.ncols)
    xr[np.arange(k), np.arange(k)] = x.schmidt[:k]
    y22 = yt[r:, r:]
    return KernelBlocks(
        rank=r,
        schmidt=x.schmidt.copy(),
        x_rotated=xr,
        y11=yt[:r, :r],
        y12=yt[:r, r:],
        y21=yt[r:, :r],
        y22=y22,
        divergence_coefficient=float(np.vdot(y22, y22).real) if y22.size else 0.0,
        left=x.left,
        right=x.right,
    )


def regularize(x: StateLike, eps: float) -> StateMatrix:
    """Replace the kernel of x by eps * identity and renormalize.

    Acts on the max(n, m) square embedding and rotates back, so for an
    already-diagonal x the result is entrywise
    [[x11, 0], [0, eps I]] / sqrt(1 + d eps^2) with d the kernel dimension.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    x = as_state(x)
    n, m = x.nrows, x.ncols
    big = max(n, m)
    r = x.rank
    if r == big:
        return x
    u = np.eye(big, dtype=np.complex128)
    u[:n, :n] = x.left
    vh = np.eye(big, dtype=np.complex128)
    vh[:m, :m] = x.right
    values = np.full(big, eps)
    values[:r] = x.schmidt[:r]
    return StateMatrix.normalized((u * values) @ vh)


@dataclass(frozen=True)
class DivergenceProbe:
    """Second-difference quotients of the curve entropy on a t grid."""

    t_grid: np.ndarray
    quotients: np.ndarray
    slope_per_decade: float
    divergence_coefficient: float
    predicted_slope: float   # 4 K ln 10 per decade of t

    @property
    def relative_slope_error(self) -> float:
        if self.predicted_slope == 0.0:
            return abs(self.slope_per_decade)
        return abs(self.slope_per_decade - self.predicted_slope) / abs(self.predicted_slope)


def divergence_probe(x: StateLike, y: np.ndarray, t_grid: Sequence[float]) -> DivergenceProbe:
    """Fit the log-divergence rate of the entropy curvature at a singular x.

    The quotients q(t) = [S(t) - 2 S(0) + S(-t)] / t^2 grow like
    -2 K log t^2, i.e. by 4 K ln 10 per decade of shrinking t.
    """
    x = as_state(x)
    t = np.asarray(sorted(t_grid, reverse=True), dtype=np.float64)
    if np.any(t <= 0.0):
        raise ValueError("t grid must be strictly positive")
    y = check_direction(x, y)
    s0 = entropy(x)
    quotients = np.array(
        [(curve_entropy(x, y, ti) - 2.0 * s0 + curve_entropy(x, y, -ti)) / (ti * ti) for ti in t]
    )
    slope = float(np.polyfit(np.log10(1.0 / t), quotients, 1)[0])
    coeff = kernel_block_partition(x, y).divergence_coefficient
    return DivergenceProbe(
        t_grid=t,
        quotients=quotients,
        slope_per_decade=slope,
        divergence_coefficient=coeff,
        predicted_slope=4.0 * coeff * math.log(10.0),
    )


# ---------------------------------------------------------------------------
# Necessary conditions at a critical point


def relative_entropy(a: np.ndarray, b: np.ndarray) -> float:
    """S(a || b) = Tr(a log a) - Tr(a log b) with masked kernels.

    Raises SingularLogError when a has support on the kernel of b (the
    relative entropy is +infinity there).
    """
    da = herm_eig(a)
    db = herm_eig(b)
    wa = np.clip(da.eigenvalues, 0.0, None)
    tr_a_log_a = float(np.sum(np.where(wa > 0.0, wa * np.log(np.where(wa > 0.0, wa, 1.0)), 0.0)))
    a_in_b = db.basis.conj().T @ a @ db.basis
    diag = np.real(np.diagonal(a_in_b))
    wb = db.eigenvalues
    kernel = wb <= RANK_TOL * max(wb[0], 0.0)
    if float(np.sum(np.abs(diag[kernel]))) > 1e-12:
        raise SingularLogError("first argument has support on the kernel of the second")
    support = ~kernel
    tr_a_log_b = float(np.sum(diag[support] * np.log(wb[support])))
    return tr_a_log_a - tr_a_log_b


@dataclass(frozen=True)
class LocalMinimumConditions:
    """Necessary conditions a non-degenerate local minimum must satisfy."""

    hadamard_term: float          # M at y
    hadamard_term_rotated: float  # M at iy
    averaged_quad: float          # Tr[y* Wavg(y)]
    log_term: float               # Gamma
    strict_holds: bool            # averaged quad < Gamma
    entropy_gap: float            # E(y) - E(x)
    entropy_bound: float          # 1 - (S(yy*||xx*) + S(y*y||xx*)) / 2
    entropy_holds: bool


def local_minimum_conditions(x: StateLike, y: np.ndarray) -> LocalMinimumConditions:
    """Evaluate both necessary inequalities at a critical x along y."""
    x = as_state(x)
    if not x.is_square:
        raise ValueError("conditions are stated for square states; zero-pad first")
    if x.rank < x.nrows:
        raise SingularLogError("conditions need a nonsingular reduced state")
    y = check_direction(x, y)
    yt = x.rotate(y)
    ent = _masked_entropy(x.probs)
    parts = _parts_rotated(x.probs, yt, ent)
    parts_i = _parts_rotated(x.probs, 1j * yt, ent)
    weights = hadamard_weights(x.probs)
    averaged = float(np.sum(np.abs(yt) ** 2 * weights.avg))
    rho = x.matrix @ x.matrix.conj().T
    rel_left = relative_entropy(y @ y.conj().T, rho)
    rel_right = relative_entropy(y.conj().T @ y, rho)
    gap = entropy(y) - ent
    bound = 1.0 - 0.5 * (rel_left + rel_right)
    return LocalMinimumConditions(
        hadamard_term=parts.hadamard_term,
        hadamard_term_rotated=parts_i.hadamard_term,
        averaged_quad=averaged,
        log_term=parts.log_term,
        strict_holds=averaged < parts.log_term,
        entropy_gap=gap,
        entropy_bound=bound,
        entropy_holds=gap >= bound - 1e-10,
    )
