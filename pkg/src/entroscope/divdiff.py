"""Divided differences and the second-order matrix-function perturbation.

For a scalar function f and a diagonal matrix A = diag(a_1, ..., a_n) the
expansion

    f(A + t B) = f(A) + t L_A(B) + t^2 Q_A(B) + O(t^3)

has entrywise closed forms built from first and second divided differences:

    [L_A(B)]_ij = D1f(a_i, a_j) * b_ij
    [Q_A(B)]_ij = sum_k D2f(a_i, a_k, a_j) * b_ik * b_kj

Coincident arguments take the confluent limits D1f(x, x) = f'(x) and
D2f(x, x, x) = f''(x) / 2.  This module never diagonalizes anything: callers
rotate into the eigenbasis first (see :mod:`entroscope.matrices`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Gap below which the derivative-based confluent formulas replace the raw
# difference quotients (absolute, on the function arguments).
CONFLUENT_TOL = 1e-7


class DomainError(ValueError):
    """Argument outside the declared domain of a scalar function."""


@dataclass(frozen=True)
class ScalarFunction:
    """A real function with explicit first and second derivatives."""

    f: Callable[[float], float]
    df: Callable[[float], float]
    d2f: Callable[[float], float]
    domain: tuple[float, float] = (-math.inf, math.inf)
    name: str = "f"

    def check_domain(self, *points: float) -> None:
        lo, hi = self.domain
        for t in points:
            if not lo < t < hi:
                raise DomainError(f"{self.name}: argument {t!r} outside open domain ({lo}, {hi})")


# The one function the entanglement machinery needs: g(t) = -t log t on (0, inf).
NEG_T_LOG_T = ScalarFunction(
    f=lambda t: -t * math.log(t),
    df=lambda t: -1.0 - math.log(t),
    d2f=lambda t: -1.0 / t,
    domain=(0.0, math.inf),
    name="-t*log(t)",
)


def divided_diff1(fn: ScalarFunction, a: float, b: float) -> float:
    """First divided difference (f(a) - f(b)) / (a - b), confluent f'(a)."""
    fn.check_domain(a, b)
    if abs(a - b) <= CONFLUENT_TOL:
        return fn.df(0.5 * (a + b))
    return (fn.f(a) - fn.f(b)) / (a - b)


def divided_diff2(fn: ScalarFunction, a: float, b: float, c: float) -> float:
    """Second divided difference, symmetric in (a, b, c), all confluent limits.

    Distinct points use the nested quotient; a coincident pair (x, x, y) uses
    f'(x)/(x - y) - (f(x) - f(y))/(x - y)^2, and a triple point f''(x)/2.
    Arguments are sorted first, which makes the result exactly permutation
    invariant.
    """
    fn.check_domain(a, b, c)
    s0, s1, s2 = sorted((a, b, c))
    g1 = s1 - s0
    g2 = s2 - s1
    if g1 <= CONFLUENT_TOL and g2 <= CONFLUENT_TOL:
        return 0.5 * fn.d2f(s1)
    if g1 <= CONFLUENT_TOL:
        x, y = 0.5 * (s0 + s1), s2
        return fn.df(x) / (x - y) - (fn.f(x) - fn.f(y)) / (x - y) ** 2
    if g2 <= CONFLUENT_TOL:
        x, y = 0.5 * (s1 + s2), s0
        return fn.df(x) / (x - y) - (fn.f(x) - fn.f(y)) / (x - y) ** 2
    d01 = (fn.f(s0) - fn.f(s1)) / (s0 - s1)
    d12 = (fn.f(s1) - fn.f(s2)) / (s1 - s2)
    return (d01 - d12) / (s0 - s2)


def _as_spectrum(alphas) -> np.ndarray:
    a = np.asarray(alphas, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("expected the diagonal of A as a 1-D real array")
    return a


def perturbation_linear(fn: ScalarFunction, alphas, b: np.ndarray) -> np.ndarray:
    """L_A(B): Hadamard product of B with the first-divided-difference matrix."""
    a = _as_spectrum(alphas)
    b = np.asarray(b, dtype=np.complex128)
    n = len(a)
    loewner = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            loewner[i, j] = divided_diff1(fn, a[i], a[j])
    return loewner * b


def perturbation_quadratic(fn: ScalarFunction, alphas, b: np.ndarray) -> np.ndarray:
    """Q_A(B): [Q]_ij = sum_k D2f(a_i, a_k, a_j) b_ik b_kj."""
    a = _as_spectrum(alphas)
    b = np.asarray(b, dtype=np.complex128)
    n = len(a)
    table = np.empty((n, n, n))
    for i in range(n):
        for k in range(n):
            for j in range(n):
                table[i, k, j] = divided_diff2(fn, a[i], a[k], a[j])
    return np.einsum("ikj,ik,kj->ij", table, b, b)


def perturbation_quadratic_trace(fn: ScalarFunction, alphas, b: np.ndarray) -> float:
    """Tr Q_A(B) for Hermitian B via the symmetrized difference of f'.

    Uses (f'(a_i) - f'(a_j)) / (2 (a_i - a_j)) with the confluent value
    f''(a_i)/2, which agrees with Tr(perturbation_quadratic) but needs only
    n^2 work.
    """
    a = _as_spectrum(alphas)
    b = np.asarray(b, dtype=np.complex128)
    if float(np.abs(b - b.conj().T).max()) > 1e-10 * max(1.0, float(np.abs(b).max())):
        raise ValueError("trace form requires Hermitian B")
    total = 0.0
    n = len(a)
    for i in range(n):
        for j in range(n):
            gap = a[i] - a[j]
            if abs(gap) <= CONFLUENT_TOL:
                fn.check_domain(a[i], a[j])
                coeff = 0.5 * fn.d2f(0.5 * (a[i] + a[j]))
            else:
                coeff = (fn.df(a[i]) - fn.df(a[j])) / (2.0 * gap)
            total += coeff * abs(b[i, j]) ** 2
    return total


@dataclass(frozen=True)
class ExpansionTerms:
    """The three terms of f(A + tB) = f(A) + t L + t^2 Q + O(t^3)."""

    zeroth: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray

    def at(self, t: float) -> np.ndarray:
        return self.zeroth + t * self.linear + t * t * self.quadratic


def perturbation_terms(fn: ScalarFunction, alphas, b: np.ndarray) -> ExpansionTerms:
    a = _as_spectrum(alphas)
    fn.check_domain(*a)
    return ExpansionTerms(
        zeroth=np.diag(np.array([fn.f(ai) for ai in a], dtype=np.complex128)),
        linear=perturbation_linear(fn, a, b),
        quadratic=perturbation_quadratic(fn, a, b),
    )


def expand(fn: ScalarFunction, alphas, b: np.ndarray, t: float) -> np.ndarray:
    """Assembled second-order expansion of f(A + tB) at a given t.

    The shifted spectrum must stay inside the domain of f; for Hermitian B
    this is guarded with the eigenvalue range of A + tB.
    """
    a = _as_spectrum(alphas)
    b = np.asarray(b, dtype=np.complex128)
    if float(np.abs(b - b.conj().T).max()) <= 1e-12 * max(1.0, float(np.abs(b).max())):
        shifted = np.linalg.eigvalsh(np.diag(a).astype(np.complex128) + t * b)
        fn.check_domain(float(shifted[0]), float(shifted[-1]))
    return perturbation_terms(fn, a, b).at(t)
