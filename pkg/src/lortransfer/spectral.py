"""Numerical checks of the stability of R: the lower bound alpha, the
node-set comparison, subinterval-average norm equivalence and the rank of
the mixed block.

alpha^2 and beta^2 are the extreme eigenvalues of the pencil
(R^T M_L R, M_H), i.e. alpha = min ||R v||_0 / ||v||_0 over the high space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import ArgumentError, ConvergenceError
from .fespace import FESpace
from .kernels import MassOperator, apply_mass, element_matrices
from .mesh import LorSpec, make_cartesian, make_lor_mesh
from .quadrature import RuleKind, gauss, legendre, make_rule
from .solvers import pcg
from .transfer import TransferPair

__all__ = [
    "Method",
    "SpectralReport",
    "lower_bound_alpha",
    "single_element_pair",
    "node_set_sweep",
    "norm_equivalence_check",
    "norm_equivalence_extremes",
    "mixed_block_singular_values",
    "mixed_block_rank",
    "SWEEP_KINDS",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 2000
SWEEP_KINDS = ("gauss-lobatto", "chebyshev-lobatto", "augmented-chebyshev",
               "augmented-gauss", "uniform")


class Method(str, Enum):
    DENSE = "dense"
    POWER = "power"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        key = {"denseeig": "dense", "poweriteration": "power", "power-iteration": "power"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ArgumentError(f"unknown eigen method {value!r}") from None


@dataclass(frozen=True)
class SpectralReport:
    alpha: float
    beta: float
    method: Method
    iterations: int = 0

    @property
    def kappa(self):
        return (self.beta / self.alpha) ** 2


def _dense(apply, n):
    A = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        A[:, j] = apply(e)
        e[j] = 0.0
    return 0.5 * (A + A.T)


def _dense_pencil(pair):
    n = pair.high.dof_count
    if n > DENSE_LIMIT:
        raise ArgumentError(f"dense eigensolve limited to {DENSE_LIMIT} high-order DOFs (have {n})")
    A = _dense(pair.normal_apply, n)
    M = _dense(lambda x: apply_mass(pair.M_H, x), n)
    return A, M


def _alpha_power(pair, tol, maxiter, seed):
    """Inverse iteration on (A, M_H) with CG inner solves; Rayleigh quotients."""
    n = pair.high.dof_count
    Mx = lambda x: apply_mass(pair.M_H, x)
    diag = pair.preconditioner_diagonal()
    v = np.random.default_rng(seed).standard_normal(n)
    v /= math.sqrt(np.dot(v, Mx(v)))
    lam_old = np.dot(v, pair.normal_apply(v))
    for it in range(1, maxiter + 1):
        w, _ = pcg(pair.normal_apply, Mx(v), diag, tol=1e-13, maxiter=10 * n + 200)
        v = w / math.sqrt(np.dot(w, Mx(w)))
        lam = np.dot(v, pair.normal_apply(v))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam, it
        lam_old = lam
    raise ConvergenceError(f"inverse iteration did not settle in {maxiter} steps "
                           f"(last eigenvalue {lam:.6e})")


def _beta_arnoldi(pair, seed):
    """Largest eigenvalue of (A, M_H) by Lanczos with CG solves for M_H."""
    n = pair.high.dof_count
    diag = pair.preconditioner_diagonal()
    Mx = lambda x: apply_mass(pair.M_H, np.ravel(x))
    solve = lambda b: pcg(Mx, np.ravel(b), diag, tol=1e-14, maxiter=10 * n + 200)[0]
    A = LinearOperator((n, n), matvec=lambda x: pair.normal_apply(np.ravel(x)), dtype=float)
    B = LinearOperator((n, n), matvec=Mx, dtype=float)
    Binv = LinearOperator((n, n), matvec=solve, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    lam = eigsh(A, k=1, M=B, Minv=Binv, which="LA", v0=v0, tol=1e-12,
                return_eigenvectors=False)
    return float(lam[0])


def lower_bound_alpha(pair: TransferPair, method="dense", tol=1e-10, maxiter=500, seed=0):
    """alpha (and beta) of R in the L2 norms of the two spaces."""
    method = Method.parse(method)
    if method is Method.DENSE or pair.high.dof_count <= 3:
        A, M = _dense_pencil(pair)
        lam = scipy.linalg.eigh(A, M, eigvals_only=True)
        lo, hi, its = lam[0], lam[-1], 0
        method_used = Method.DENSE if method is Method.DENSE else method
    else:
        lo, its = _alpha_power(pair, tol, maxiter, seed)
        hi = _beta_arnoldi(pair, seed)
        method_used = method
    return SpectralReport(math.sqrt(max(lo, 0.0)), math.sqrt(max(hi, 0.0)), method_used, its)


def single_element_pair(p, n=None, q=0, nodes="gauss-lobatto", continuity="H1"):
    """1D pair on [-1, 1]: degree p on one element, degree q on n LOR cells."""
    n = p + 1 if n is None else int(n)
    mesh = make_cartesian(1, 1, (-1.0, 1.0))
    high = FESpace(mesh, p, "L2" if p == 0 else continuity)
    low = FESpace(make_lor_mesh(mesh, LorSpec(n, nodes)), q, "L2")
    return TransferPair(high, low, n)


def node_set_sweep(kinds=SWEEP_KINDS, ps=range(2, 33), method="dense"):
    """Rows (kind, p, alpha, beta, kappa) for 1D single-element pairs, q=0, n=p+1."""
    if isinstance(kinds, (str, RuleKind)):
        kinds = [kinds]
    rows = []
    for kind in kinds:
        kind = RuleKind.parse(kind)
        for p in ps:
            rep = lower_bound_alpha(single_element_pair(int(p), nodes=kind), method)
            rows.append({"kind": kind.value, "p": int(p), "alpha": rep.alpha,
                         "beta": rep.beta, "kappa": rep.kappa})
    return rows


def _average_operators(p, kind):
    """Legendre-basis matrices for degree p-1 polynomials on [-1, 1]: the L2
    Gram matrix and the Gram matrix of the subinterval-average function on
    the closed node mesh with n = p cells."""
    if p < 1 or p > 32:
        raise ArgumentError("norm equivalence check needs 1 <= p <= 32")
    kind = RuleKind.parse(kind)
    if not kind.closed:
        raise ArgumentError(f"node set must be closed, got {kind.value}")
    r = LorSpec(p, kind).reference_points()
    k = np.arange(p)
    g = gauss(p + 1)
    a, b = r[:-1, None], r[1:, None]
    x = a + (b - a) * 0.5 * (np.asarray(g.points)[None, :] + 1.0)      # (cells, G)
    w = 0.5 * (b - a) * np.asarray(g.weights)[None, :]
    P = np.stack([legendre(int(j), x)[0] for j in k], axis=-1)           # (cells, G, p)
    avg = np.einsum("cg,cgj->cj", w, P) / (b - a)                      # (cells, p)
    G_avg = np.einsum("c,ci,cj->ij", (b - a)[:, 0], avg, avg)
    G = np.diag(2.0 / (2.0 * k + 1.0))
    return G, G_avg


def norm_equivalence_extremes(p, kind="gauss-lobatto"):
    """Exact (min, max) of ||v_L||_0 / ||v||_0 over polynomials of degree p - 1."""
    G, G_avg = _average_operators(p, kind)
    lam = scipy.linalg.eigh(G_avg, G, eigvals_only=True)
    return math.sqrt(max(lam[0], 0.0)), math.sqrt(lam[-1])


def norm_equivalence_check(p, kind="gauss-lobatto", samples=200, seed=0):
    """Sampled (min, max) of ||v_L||_0 / ||v||_0 over random degree p-1
    polynomials v, v_L their averages on the n = p cells of the node mesh."""
    G, G_avg = _average_operators(p, kind)
    C = np.random.default_rng(seed).standard_normal((int(samples), p))
    r = np.sqrt(np.einsum("si,ij,sj->s", C, G_avg, C) / np.einsum("si,ij,sj->s", C, G, C))
    return float(r.min()), float(r.max())


def mixed_block_singular_values(p, n, q=0, nodes="gauss-lobatto"):
    """Singular values of M_L^{-1/2} M_LH M_H^{-1/2} on one 1D element."""
    mesh = make_cartesian(1, 1, (-1.0, 1.0))
    high = FESpace(mesh, p, "L2")
    low = FESpace(make_lor_mesh(mesh, LorSpec(int(n), nodes)), q, "L2")
    B = element_matrices(MassOperator(low, high, mesh=mesh))[0]
    ML = element_matrices(MassOperator(low, mesh=mesh))[0]
    MH = element_matrices(MassOperator(high))[0]
    Li = np.linalg.inv(np.linalg.cholesky(ML))
    Hi = np.linalg.inv(np.linalg.cholesky(MH))
    return np.linalg.svd(Li @ B @ Hi.T, compute_uv=False)


def mixed_block_rank(p, n, q=0, nodes="gauss-lobatto", tol=1e-10):
    s = mixed_block_singular_values(p, n, q, nodes)
    return int(np.sum(s > tol))
