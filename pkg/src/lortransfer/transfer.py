"""Conservative restriction R and prolongation P between a high-order space
and a low-order-refined (LOR) space.

  R = M_L^{-1} M_LH
  P = (R^T M_L R)^{-1} R^T M_L = (M_LH^T M_L^{-1} M_LH)^{-1} M_LH^T

M_L is block diagonal (the low space is L2), so R is element local. The
system for P is solved by CG preconditioned with diag(M_H), or directly per
element when the high space is L2 as well. Density-weighted variants use
rho_L in M_L and rho_H in M_LH and M_H.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError, CompatibilityError, UnsupportedError
from .fespace import FESpace, Field
from .kernels import (BlockInverse, MassOperator, apply_mass, apply_mass_transpose,
                      element_matrices, mass_diagonal)
from .mesh import LorSpec, make_lor_mesh
from .solvers import SolveReport, pcg

__all__ = [
    "TransferPair",
    "make_pair",
    "lor_pair",
    "restrict",
    "prolong",
    "restrict_weighted",
    "prolong_weighted",
    "density_from_high",
    "density_from_low",
    "minimal_lor_n",
]

DIRECT_BLOCK_LIMIT = 512


def minimal_lor_n(p, q):
    """Smallest n with n (q + 1) >= p + 1."""
    return max(1, math.ceil((p + 1) / (q + 1)))


class TransferPair:
    """High space, LOR space and the operators R, P, Q = R P between them."""

    def __init__(self, high: FESpace, low: FESpace, lor_n=None, weight=None,
                 tol=1e-12, maxiter=200):
        if low.is_h1:
            raise UnsupportedError("the low-order space must be L2 (discontinuous)")
        if not low.mesh.is_lor_of(high.mesh):
            raise ArgumentError("low space must live on the LOR mesh built from the high mesh")
        n = low.mesh.lor.n
        if lor_n is not None and int(lor_n) != n:
            raise ArgumentError(f"lor_n={lor_n} does not match the LOR mesh (n={n})")
        p, q = high.degree, low.degree
        if n * (q + 1) < p + 1:
            raise CompatibilityError(
                f"n (q + 1) >= p + 1 violated: n={n}, q={q}, p={p} ({n * (q + 1)} < {p + 1})")
        self.high, self.low, self.n = high, low, n
        self.tol, self.maxiter = float(tol), int(maxiter)
        self.rho_H = self.rho_L = None
        if weight is not None:
            rho_H, rho_L = weight
            if not isinstance(rho_H, Field) or not isinstance(rho_L, Field):
                raise ArgumentError("weight must be a pair of Fields (rho_H, rho_L)")
            self.rho_H, self.rho_L = rho_H, rho_L
        self.M_LH = MassOperator(low, high, weight=self.rho_H)
        self.M_L = MassOperator(low, weight=self.rho_L)
        self.M_H = MassOperator(high, weight=self.rho_H)
        self._ml_inv = BlockInverse(self.M_L)
        self._diag = mass_diagonal(self.M_H)
        self._direct = None
        self.last_report = None

    @property
    def weighted(self):
        return self.rho_H is not None

    @property
    def uses_direct_solve(self):
        return (not self.high.is_h1) and self.high.local_size ** self.high.dim <= DIRECT_BLOCK_LIMIT

    # -- operators on coefficient vectors
    def restrict_vec(self, u):
        return self._ml_inv(apply_mass(self.M_LH, u))

    def normal_apply(self, x):
        """A x with A = R^T M_L R = M_LH^T M_L^{-1} M_LH."""
        return apply_mass_transpose(self.M_LH, self._ml_inv(apply_mass(self.M_LH, x)))

    def preconditioner_diagonal(self):
        return self._diag

    def _direct_blocks(self):
        if self._direct is None:
            ML = MassOperator(self.low, weight=self.rho_L, mesh=self.high.mesh)
            Mhat = element_matrices(self.M_LH)
            A = np.einsum("eki,ekj->eij", Mhat, np.linalg.solve(element_matrices(ML), Mhat))
            self._direct = np.linalg.inv(0.5 * (A + A.transpose(0, 2, 1)))
        return self._direct

    def prolong_vec(self, v):
        b = apply_mass_transpose(self.M_LH, v)
        if self.uses_direct_solve:
            emap = self.high.element_dofs
            x = np.empty(self.high.dof_count)
            x[emap] = np.einsum("eij,ej->ei", self._direct_blocks(), b[emap])
            r = b - self.normal_apply(x)
            dinv = 1.0 / self._diag
            bn = math.sqrt(np.dot(b, dinv * b)) or 1.0
            rel = math.sqrt(np.dot(r, dinv * r)) / bn
            report = SolveReport(0, rel, True, rel)
        else:
            x, report = pcg(self.normal_apply, b, self._diag, tol=self.tol, maxiter=self.maxiter)
        self.last_report = report
        return x, report

    def project_vec(self, v):
        """Q v = R P v."""
        return self.restrict_vec(self.prolong_vec(v)[0])

    def __repr__(self):
        return (f"TransferPair(p={self.high.degree}, q={self.low.degree}, n={self.n}, "
                f"high={self.high.continuity.value}, weighted={self.weighted})")


def make_pair(high: FESpace, low: FESpace, lor_n=None, weight=None, **solver) -> TransferPair:
    """Bind a high-order space and an L2 LOR space; ``weight`` is (rho_H, rho_L)."""
    return TransferPair(high, low, lor_n, weight, **solver)


def lor_pair(mesh, p, q=0, lor_n=None, nodes="gauss-lobatto", continuity="H1", **kw):
    """Build the spaces on ``mesh`` and its LOR refinement and pair them."""
    n = minimal_lor_n(p, q) if lor_n is None else int(lor_n)
    high = FESpace(mesh, p, continuity)
    low = FESpace(make_lor_mesh(mesh, LorSpec(n, nodes)), q, "L2")
    return TransferPair(high, low, n, **kw)


def _as_field(x, space, what):
    if isinstance(x, Field):
        if x.space is not space:
            raise ArgumentError(f"{what}: field is on the wrong space")
        return x.coefficients
    x = np.asarray(x, dtype=float)
    if x.shape != (space.dof_count,):
        raise ArgumentError(f"{what}: expected {space.dof_count} coefficients")
    return x


def restrict(pair: TransferPair, u_H) -> Field:
    """v_L = R u_H, i.e. (v_L, w_L) = (u_H, w_L) for every w_L in the low space."""
    return Field(pair.low, pair.restrict_vec(_as_field(u_H, pair.high, "restrict")))


def prolong(pair: TransferPair, v_L):
    """u_H = P v_L; returns (Field, SolveReport)."""
    x, rep = pair.prolong_vec(_as_field(v_L, pair.low, "prolong"))
    return Field(pair.high, x), rep


def _need_weight(pair):
    if not pair.weighted:
        raise ArgumentError("pair has no density weight installed")


def restrict_weighted(pair: TransferPair, u_H) -> Field:
    """Density-weighted restriction: int u_L rho_L = int u_H rho_H."""
    _need_weight(pair)
    return restrict(pair, u_H)


def prolong_weighted(pair: TransferPair, v_L):
    """Density-weighted prolongation with diag(M_H^rho) preconditioning."""
    _need_weight(pair)
    return prolong(pair, v_L)


def density_from_high(rho_H: Field, low_space: FESpace):
    """(rho_H, rho_L) with rho_L = R rho_H computed by the unweighted pair."""
    pair = TransferPair(rho_H.space, low_space)
    return rho_H, restrict(pair, rho_H)


def density_from_low(rho_L: Field, high_space: FESpace):
    """(rho_H, rho_L') with rho_H = P rho_L and rho_L' = R rho_H.

    Replacing rho_L by Q rho_L keeps the total mass (Q is conservative) and
    makes the pair consistent, which the momentum identity of the weighted
    prolongation relies on.
    """
    pair = TransferPair(high_space, rho_L.space)
    rho_H, _ = prolong(pair, rho_L)
    return rho_H, restrict(pair, rho_H)
