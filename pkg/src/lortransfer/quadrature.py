"""One-dimensional point and weight families on [-1, 1].

Gauss and Gauss-Lobatto rules are computed by safeguarded Newton iteration
on the Legendre polynomials; the Chebyshev families use closed-form cosines.
The remaining families (uniform, augmented, Gauss-Lobatto midpoints) are
point sets only and carry no weights.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ArgumentError, ConvergenceError

__all__ = [
    "RuleKind",
    "QuadRule",
    "AngleView",
    "make_rule",
    "gauss",
    "gauss_lobatto",
    "angle_view",
    "check_interlacing",
    "diag_precond_condition",
    "diag_precond_spectrum",
    "legendre",
    "lagrange_matrix",
]


class RuleKind(str, Enum):
    GAUSS = "gauss"
    GAUSS_LOBATTO = "gauss-lobatto"
    CHEBYSHEV = "chebyshev"
    CHEBYSHEV_LOBATTO = "chebyshev-lobatto"
    UNIFORM_CLOSED = "uniform"
    AUGMENTED_CHEBYSHEV = "augmented-chebyshev"
    AUGMENTED_GAUSS = "augmented-gauss"
    GAUSS_LOBATTO_MIDPOINTS = "gauss-lobatto-midpoints"

    @classmethod
    def parse(cls, value) -> "RuleKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"gl": "gauss-lobatto", "cl": "chebyshev-lobatto",
                   "g": "gauss", "c": "chebyshev", "uniform-closed": "uniform",
                   "gl-midpoints": "gauss-lobatto-midpoints"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ArgumentError(f"unknown rule kind {value!r}") from None

    @property
    def closed(self) -> bool:
        return self in _CLOSED


_CLOSED = {
    RuleKind.GAUSS_LOBATTO,
    RuleKind.CHEBYSHEV_LOBATTO,
    RuleKind.UNIFORM_CLOSED,
    RuleKind.AUGMENTED_CHEBYSHEV,
    RuleKind.AUGMENTED_GAUSS,
}


@dataclass(frozen=True, eq=False)
class QuadRule:
    """Points (and optionally weights) of a 1D rule on [-1, 1].

    Closed rules of order ``n`` have ``n + 1`` points including both
    endpoints; open rules have ``n`` interior points. ``weights`` is None
    for point-only families.
    """

    kind: RuleKind
    n: int
    points: np.ndarray
    weights: Optional[np.ndarray] = None
    angles: Optional[np.ndarray] = None

    @property
    def closed(self) -> bool:
        return self.kind.closed

    def __len__(self):
        return len(self.points)

    def integrate(self, f) -> float:
        if self.weights is None:
            raise ArgumentError(f"{self.kind.value} is a point-only set")
        return float(np.dot(self.weights, f(self.points)))


@dataclass(frozen=True, eq=False)
class AngleView:
    angles: np.ndarray
    gaps: np.ndarray
    spacings: np.ndarray


def legendre(n: int, x):
    """Return (P_n(x), P_{n-1}(x)) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p, p_prev


def _gauss_residual(n, x):
    p, pm = legendre(n, x)
    dp = n * (x * p - pm) / (x * x - 1.0)
    return p, dp


def _lobatto_residual(n, x):
    # f = (1 - x^2) P_n'(x) = n (P_{n-1} - x P_n);  f' = -n (n + 1) P_n
    p, pm = legendre(n, x)
    return n * (pm - x * p), -n * (n + 1) * p


def _safeguarded_newton(residual, seed, lo, hi, tol=1e-15, maxiter=100):
    """Newton on sign-bracketed roots, all at once.

    Each root keeps its own bracket [lo, hi]; a step that leaves the bracket
    is replaced by bisection. Raises ConvergenceError naming the first node
    that failed to settle.
    """
    x = np.array(seed, dtype=float)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    f_lo = residual(lo)[0]
    active = np.ones(len(x), dtype=bool)
    for _ in range(maxiter):
        if not active.any():
            break
        f, df = residual(x)
        same = np.sign(f) == np.sign(f_lo)
        lo = np.where(active & same, x, lo)
        f_lo = np.where(active & same, f, f_lo)
        hi = np.where(active & ~same, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        x_new = x - step
        done = (np.abs(step) <= tol) | (f == 0.0)
        bad = ~((lo < x_new) & (x_new < hi)) & ~done
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        x_new = np.where(f == 0.0, x, x_new)
        x = np.where(active, x_new, x)
        active &= ~done
    if not active.any():
        return x
    node = int(np.flatnonzero(active)[0]) + 1
    raise ConvergenceError(f"node {node} did not converge after {maxiter} iterations")


@lru_cache(maxsize=None)
def gauss(n: int) -> QuadRule:
    if n < 1:
        raise ArgumentError("Gauss rule needs n >= 1")
    x = np.zeros(n)
    i = np.arange(1, n // 2 + 1)
    if len(i):
        # each root lies strictly inside its Bruns interval
        lo = -np.cos((2 * i - 1) * math.pi / (2 * n + 1))
        hi = -np.cos(2 * i * math.pi / (2 * n + 1))
        seed = -np.cos((i - 0.5) * math.pi / n)
        x[: len(i)] = _safeguarded_newton(lambda t: _gauss_residual(n, t), seed, lo, hi)
    _symmetrize(x)
    _, dp = _gauss_residual(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return QuadRule(RuleKind.GAUSS, n, _ro(x), _ro(w))


@lru_cache(maxsize=None)
def gauss_lobatto(n: int) -> QuadRule:
    """n + 1 Gauss-Lobatto points: zeros of (1 - x^2) P_n'(x)."""
    if n < 1:
        raise ArgumentError("Gauss-Lobatto rule needs n >= 1")
    x = np.zeros(n + 1)
    x[0], x[n] = -1.0, 1.0
    i = np.arange(1, (n + 1) // 2)
    if len(i):
        lo = -np.cos(2 * i * math.pi / (2 * n + 1))
        hi = -np.cos((2 * i + 1) * math.pi / (2 * n + 1))
        seed = -np.cos(i * math.pi / n)
        x[1: len(i) + 1] = _safeguarded_newton(lambda t: _lobatto_residual(n, t), seed, lo, hi)
    _symmetrize(x)
    p, _ = legendre(n, x)
    w = 2.0 / (n * (n + 1) * p * p)
    w[0] = w[-1] = 2.0 / (n * (n + 1))
    w = 0.5 * (w + w[::-1])
    return QuadRule(RuleKind.GAUSS_LOBATTO, n, _ro(x), _ro(w))


def _ro(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def _symmetrize(x):
    # exact mirror symmetry; e.g. cos(pi/2) is not exactly zero in floating point
    m = len(x)
    x[m - m // 2:] = -x[: m // 2][::-1]
    if m % 2:
        x[m // 2] = 0.0
    return x


def make_rule(kind, n: int) -> QuadRule:
    """Build the rule of the given family and order.

    Closed families give ``n + 1`` points (``n`` subintervals). Augmented
    families are the open rule with ``n - 1`` points plus the endpoints,
    so they too have ``n`` subintervals.
    """
    kind = RuleKind.parse(kind)
    n = int(n)
    if n < 1:
        raise ArgumentError(f"rule order must be >= 1, got {n}")
    if kind is RuleKind.GAUSS:
        return gauss(n)
    if kind is RuleKind.GAUSS_LOBATTO:
        return gauss_lobatto(n)
    if kind is RuleKind.CHEBYSHEV:
        phi = (np.arange(1, n + 1) - 0.5) * math.pi / n
        return QuadRule(kind, n, _ro(_symmetrize(-np.cos(phi))), angles=_ro(phi))
    if kind is RuleKind.CHEBYSHEV_LOBATTO:
        phi = np.arange(n + 1) * math.pi / n
        return QuadRule(kind, n, _ro(_symmetrize(-np.cos(phi))), angles=_ro(phi))
    if kind is RuleKind.UNIFORM_CLOSED:
        return QuadRule(kind, n, _ro(_symmetrize(np.linspace(-1.0, 1.0, n + 1))))
    if kind in (RuleKind.AUGMENTED_CHEBYSHEV, RuleKind.AUGMENTED_GAUSS):
        inner = np.empty(0)
        if n > 1:
            base = RuleKind.CHEBYSHEV if kind is RuleKind.AUGMENTED_CHEBYSHEV else RuleKind.GAUSS
            inner = make_rule(base, n - 1).points
        return QuadRule(kind, n, _ro(np.concatenate([[-1.0], inner, [1.0]])))
    if kind is RuleKind.GAUSS_LOBATTO_MIDPOINTS:
        gl = gauss_lobatto(n).points
        return QuadRule(kind, n, _ro(_symmetrize(0.5 * (gl[1:] + gl[:-1]))))
    raise ArgumentError(f"unhandled rule kind {kind}")  # pragma: no cover


def angle_view(rule: QuadRule) -> AngleView:
    if rule.angles is not None:
        angles = np.array(rule.angles)
    else:
        angles = np.arccos(np.clip(-np.asarray(rule.points), -1.0, 1.0))
    return AngleView(_ro(angles), _ro(np.diff(angles)), _ro(np.diff(rule.points)))


def check_interlacing(gauss_rule: QuadRule, gl_rule: QuadRule) -> bool:
    g = np.asarray(gauss_rule.points)
    c = np.asarray(gl_rule.points)
    if len(c) != len(g) + 1:
        raise ArgumentError(
            f"expected {len(g) + 1} closed points for {len(g)} open points, got {len(c)}")
    return bool(np.all(c[:-1] < g) and np.all(g < c[1:]))


def lagrange_matrix(nodes, x) -> np.ndarray:
    """Values of the Lagrange basis on ``nodes`` at points ``x``.

    Returns shape (len(x), len(nodes)); barycentric formula, exact unit rows
    where a point coincides with a node.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(nodes)
    if m == 1:
        return np.ones((len(x), 1))
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    d = x[:, None] - nodes[None, :]
    exact = d == 0.0
    d[exact] = 1.0
    terms = bw[None, :] / d
    out = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if rows.any():
        out[rows] = exact[rows].astype(float)
    return out


def diag_precond_spectrum(kind, n: int):
    """Extreme eigenvalues (lo, hi) of D^{-1/2} M D^{-1/2}, D = diag(M).

    M is the 1D nodal mass matrix on the family's points, assembled exactly
    with a Gauss rule of sufficient order.
    """
    if n > 64:
        raise ArgumentError("dense analysis is limited to n <= 64")
    pts = make_rule(kind, n).points
    g = gauss(len(pts) + 1)
    B = lagrange_matrix(pts, g.points)
    M = B.T @ (g.weights[:, None] * B)
    s = 1.0 / np.sqrt(np.diag(M))
    lam = np.linalg.eigvalsh(s[:, None] * M * s[None, :])
    return float(lam[0]), float(lam[-1])


def diag_precond_condition(kind, n: int) -> float:
    """Condition number of D^{-1} M for the 1D nodal mass matrix on a point family."""
    lo, hi = diag_precond_spectrum(kind, n)
    return hi / lo
