"""Local minimization of the entanglement entropy over the unit sphere of a subspace.

The optimizer runs projected gradient descent with the sphere retraction
x <- (x + t D) / |x + t D| and Armijo backtracking, then polishes with damped
Newton steps on the real tangent frame.  Second derivatives come from the
dispatching derivative engine, so iterates that brush the singular boundary
keep working: divergent directions are infinitely stiff and are simply
excluded from the step.

Critical points are classified from the spectrum of the polarized Hessian.
The quadratic form behind it is Q(y) = |y|^2 D2_{y/|y|} E(x), whose
off-diagonal entries follow from evaluating Q on sums of frame directions.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .derivatives import (
    StateLike,
    StateMatrix,
    as_state,
    entropy,
    first_derivative,
    second_derivative,
)
from .matrices import frob_norm
from .subspaces import Subspace, complement

DEGENERATE_TOL = 1e-6
DEFAULT_TOL_GRAD = 1e-9

CLASS_NONDEGENERATE = "nondegenerate_min"
CLASS_DEGENERATE = "degenerate_min"
CLASS_SADDLE = "saddle_or_max"
CLASS_DIVERGENT_BOUNDARY = "divergent_boundary"


def thread_count() -> int:
    """Worker cap from ENTROSCOPE_THREADS (default 1, serial)."""
    raw = os.environ.get("ENTROSCOPE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TangentFrame:
    """Real orthonormal frame of the tangent space at x inside a subspace.

    For each complex basis element y of the orthogonal complement of x the
    frame carries the pair (y, iy); the real dimension is 2 (dim K - 1).
    """

    state: StateMatrix
    complex_dirs: np.ndarray                  # (k, n, m)
    directions: tuple[np.ndarray, ...] = field(repr=False, default=())

    @property
    def real_dim(self) -> int:
        return len(self.directions)


def tangent_frame(space: Subspace, x: StateLike) -> TangentFrame:
    x = as_state(x)
    comp = complement(space, x)
    dirs: list[np.ndarray] = []
    for y in comp.basis:
        dirs.append(y)
        dirs.append(1j * y)
    return TangentFrame(state=x, complex_dirs=comp.basis, directions=tuple(dirs))


def gradient(x: StateLike, frame: TangentFrame) -> np.ndarray:
    """First derivative of E along every frame direction.

    Propagates SingularLogError for kernel-feeding directions at a singular
    x; the minimizer's internal stepping uses the dispatching engine instead.
    """
    x = as_state(x)
    return np.array([first_derivative(x, y) for y in frame.directions])


class DivergentDirectionError(RuntimeError):
    """A frame direction has a divergent second derivative."""


def _polarized_hessian(x: StateMatrix, dirs: list[np.ndarray]) -> np.ndarray:
    """Hessian of the homogenized quadratic form on the given real frame."""
    r = len(dirs)
    diag = np.empty(r)
    for a, y in enumerate(dirs):
        rep = second_derivative(x, y)
        if rep.is_divergent:
            raise DivergentDirectionError(f"direction {a} is divergent")
        diag[a] = rep.d2
    h = np.diag(diag)
    for a in range(r):
        for b in range(a + 1, r):
            w = dirs[a] + dirs[b]
            n2 = float(np.vdot(w, w).real)
            rep = second_derivative(x, w / math.sqrt(n2))
            if rep.is_divergent:
                raise DivergentDirectionError(f"direction pair ({a}, {b}) is divergent")
            q = n2 * rep.d2
            h[a, b] = h[b, a] = 0.5 * (q - diag[a] - diag[b])
    return h


@dataclass(frozen=True)
class HessianInfo:
    matrix: np.ndarray | None
    spectrum: np.ndarray | None       # ascending
    divergent_directions: tuple[int, ...]


def hessian(x: StateLike, frame: TangentFrame) -> HessianInfo:
    """Polarized Hessian on the frame; no matrix when a direction diverges."""
    x = as_state(x)
    divergent = tuple(
        a for a, y in enumerate(frame.directions) if second_derivative(x, y).is_divergent
    )
    if divergent:
        return HessianInfo(matrix=None, spectrum=None, divergent_directions=divergent)
    h = _polarized_hessian(x, list(frame.directions))
    return HessianInfo(matrix=h, spectrum=np.sort(np.linalg.eigvalsh(h)), divergent_directions=())


def _finite_sector(x: StateMatrix, directions: tuple[np.ndarray, ...]) -> tuple[list[np.ndarray], bool]:
    """Real-orthonormal directions spanning the finite (non-divergent) sector.

    At a rank-deficient x a direction diverges iff its kernel-kernel block is
    nonzero; that block map is real-linear, so the finite sector is its null
    space over real coefficients.
    """
    if not directions:
        return [], False
    r = x.rank
    n, m = x.nrows, x.ncols
    if r == min(n, m):
        return list(directions), False
    blocks = [x.rotate(y)[r:, r:].ravel() for y in directions]
    b = np.array([np.concatenate([blk.real, blk.imag]) for blk in blocks]).T
    u, s, vt = np.linalg.svd(b, full_matrices=True)
    cut = 1e-10 * max(1.0, s[0] if len(s) else 0.0)
    rank_b = int(np.count_nonzero(s > cut))
    count = len(directions)
    if rank_b == 0:
        return list(directions), False
    if rank_b == count:
        return [], True
    coeffs = vt[rank_b:]   # real orthonormal rows spanning the null space
    sector = [
        sum(c * y for c, y in zip(row, directions))
        for row in coeffs
    ]
    return sector, True


def _curve_confirms_minimum(x: StateMatrix, y: np.ndarray, slack: float = 1e-10) -> bool:
    from .derivatives import curve_entropy

    e0 = entropy(x)
    for t in (1e-3, 3e-3, 1e-2, 3e-2):
        if curve_entropy(x, y, t) < e0 - slack or curve_entropy(x, y, -t) < e0 - slack:
            return False
    return True


@dataclass(frozen=True)
class Classification:
    grad_norm: float
    criticality_residual: float
    hessian_spectrum: tuple[float, ...] | None
    classification: str
    divergent_directions: int
    finite_directions: int


def classify(x: StateLike, space: Subspace, *, tol_grad: float = DEFAULT_TOL_GRAD,
             degenerate_tol: float = DEGENERATE_TOL) -> Classification:
    """Critical-point classification from the tangent Hessian spectrum.

    Divergent directions count as (infinitely) positive.  A critical point is
    non-degenerate when every finite eigenvalue clears ``degenerate_tol``;
    near-zero eigenvalues demand that sampled curve values confirm local
    minimality before the point is tagged a degenerate minimum.
    """
    x = as_state(x)
    frame = tangent_frame(space, x)
    if frame.real_dim == 0:
        return Classification(
            grad_norm=0.0, criticality_residual=0.0, hessian_spectrum=(),
            classification=CLASS_NONDEGENERATE, divergent_directions=0, finite_directions=0,
        )
    reports = [second_derivative(x, y) for y in frame.directions]
    g = np.array([rep.d1 for rep in reports])
    gn = float(np.linalg.norm(g))
    crit = max(rep.criticality_residual for rep in reports)
    sector, has_divergent = _finite_sector(x, frame.directions)
    n_div = frame.real_dim - len(sector)
    hmat = _polarized_hessian(x, sector) if sector else None
    spectrum: tuple[float, ...] = ()
    if hmat is not None:
        spectrum = tuple(np.sort(np.linalg.eigvalsh(hmat)))
    if gn >= tol_grad:
        tag = CLASS_SADDLE
    elif hmat is None:
        # every tangent direction is infinitely stiff
        tag = CLASS_DIVERGENT_BOUNDARY
    else:
        lam = np.array(spectrum)
        negative = lam < -degenerate_tol
        soft = np.abs(lam) <= degenerate_tol
        if negative.any():
            tag = CLASS_SADDLE
        elif soft.any():
            lam_all, vecs = np.linalg.eigh(hmat)
            ok = True
            for idx in np.nonzero(np.abs(lam_all) <= degenerate_tol)[0]:
                y_soft = sum(c * y for c, y in zip(vecs[:, idx], sector))
                y_soft = y_soft / frob_norm(y_soft)
                if not _curve_confirms_minimum(x, y_soft):
                    ok = False
                    break
            tag = CLASS_DEGENERATE if ok else CLASS_SADDLE
        elif has_divergent:
            tag = CLASS_DIVERGENT_BOUNDARY
        else:
            tag = CLASS_NONDEGENERATE
    return Classification(
        grad_norm=gn,
        criticality_residual=crit,
        hessian_spectrum=spectrum,
        classification=tag,
        divergent_directions=n_div,
        finite_directions=len(sector),
    )


@dataclass(frozen=True)
class MinimizeOptions:
    restarts: int = 10
    max_iter: int = 400
    tol_grad: float = DEFAULT_TOL_GRAD
    armijo: float = 1e-4
    newton_threshold: float = 1e-2   # switch to Newton polish below this gradient norm
    min_step: float = 1e-14


@dataclass(frozen=True)
class MinimizationResult:
    state: StateMatrix
    value: float
    grad_norm: float
    hessian_spectrum: tuple[float, ...] | None
    classification: str
    iterations: int
    seed: int
    restart: int
    converged: bool


@dataclass(frozen=True)
class MinimizeOutcome:
    best: MinimizationResult
    results: tuple[MinimizationResult, ...]


def _line_search(space: Subspace, coeffs: np.ndarray, value: float, step_dir: np.ndarray,
                 slope: float, t0: float, armijo: float, min_step: float):
    """Backtracking Armijo search along a coefficient-space direction."""
    t = t0
    while t >= min_step:
        cand = coeffs + t * step_dir
        cand = cand / np.linalg.norm(cand)
        val = entropy(space.combine(cand))
        if val <= value + armijo * t * slope:
            return t, cand, val
        t *= 0.5
    return None


def _minimize_single(space: Subspace, seed: int, restart: int, opts: MinimizeOptions) -> MinimizationResult:
    rng = np.random.default_rng([int(seed), int(restart)])
    c = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
    c = c / np.linalg.norm(c)
    x = StateMatrix.normalized(space.combine(c))
    value = entropy(x)
    step_memory = 1.0
    iterations = 0
    converged = False
    gn = math.inf
    for iterations in range(1, opts.max_iter + 1):
        frame = tangent_frame(space, x)
        if frame.real_dim == 0:
            converged = True
            gn = 0.0
            break
        dirs = list(frame.directions)
        if x.rank < min(x.nrows, x.ncols):
            dirs, _ = _finite_sector(x, frame.directions)
            if not dirs:
                # pinned at the singular boundary: every direction is stiff
                converged = True
                gn = 0.0
                break
        g = np.array([second_derivative(x, y).d1 for y in dirs])
        gn = float(np.linalg.norm(g))
        if gn < opts.tol_grad:
            converged = True
            break
        # coefficient-space lift of each direction
        dir_coeffs = np.array([space.coefficients(y) for y in dirs])
        accepted = None
        if gn < opts.newton_threshold:
            try:
                h = _polarized_hessian(x, dirs)
                lam, vec = np.linalg.eigh(h)
                floor = max(1e-8, 1e-8 * float(np.abs(lam).max()))
                lam_safe = np.maximum(lam, floor)
                s_newton = -vec @ ((vec.T @ g) / lam_safe)
                slope = float(g @ s_newton)
                if slope < 0.0:
                    step_vec = s_newton @ dir_coeffs
                    accepted = _line_search(
                        space, space.coefficients(x.matrix), value, step_vec,
                        slope, 1.0, opts.armijo, opts.min_step,
                    )
            except DivergentDirectionError:
                accepted = None
        if accepted is None:
            step_vec = (-g) @ dir_coeffs
            slope = -gn * gn
            accepted = _line_search(
                space, space.coefficients(x.matrix), value, step_vec,
                slope, step_memory, opts.armijo, opts.min_step,
            )
            if accepted is not None:
                step_memory = min(4.0, accepted[0] * 2.0)
        if accepted is None:
            break   # stalled; report the point as-is
        _, c_new, value = accepted
        x = StateMatrix.normalized(space.combine(c_new))
    cls = classify(x, space, tol_grad=opts.tol_grad)
    return MinimizationResult(
        state=x,
        value=entropy(x),
        grad_norm=cls.grad_norm,
        hessian_spectrum=cls.hessian_spectrum,
        classification=cls.classification,
        iterations=iterations,
        seed=seed,
        restart=restart,
        converged=converged,
    )


def minimize(space: Subspace, seed: int, opts: MinimizeOptions = MinimizeOptions()) -> MinimizeOutcome:
    """Best-of-restarts local minimization of E over the unit sphere of a subspace.

    Restarts are independent (Haar-random seeded starts) and may run on a
    thread pool capped by ENTROSCOPE_THREADS; the merge order is fixed by
    restart index, so results are reproducible either way.
    """
    if space.dim < 1:
        raise ValueError("subspace must have dimension at least 1")
    workers = thread_count()
    indices = list(range(opts.restarts))
    if workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _minimize_single(space, seed, i, opts), indices))
    else:
        results = [_minimize_single(space, seed, i, opts) for i in indices]
    best = min(results, key=lambda r: (r.value, r.restart))
    return MinimizeOutcome(best=best, results=tuple(results))
