"""Coarsening from a uniformly refined space back to its parent space.

With V_C contained in V_F and R the natural injection, the coarse field is
P u_F = (R^T M_F R)^{-1} R^T M_F u_F, solved by CG preconditioned with the
diagonal of the coarse mass matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError
from .fespace import FESpace, Field, integrate, interpolate_nodal, l2_error
from .kernels import MassOperator, apply_mass, mass_diagonal
from .mesh import make_cartesian, refine_uniform
from .quadrature import lagrange_matrix
from .solvers import pcg

__all__ = ["NestedPair", "inject", "coarsen", "injection_matrix_1d", "run_coarsening_study"]


def injection_matrix_1d(space: FESpace, fine: FESpace, axis: int, levels: int):
    """Dense (fine axis size, coarse axis size) matrix evaluating coarse basis
    functions at the fine nodes of one axis."""
    c = 2 ** levels
    nodes = np.asarray(space.nodes)
    fnodes = np.asarray(fine.nodes)
    ci, fi = space.axis_index(axis), fine.axis_index(axis)
    S = np.zeros((fine.axis_size(axis), space.axis_size(axis)))
    for s in range(c):
        xi = (2.0 * s + fnodes + 1.0) / c - 1.0           # child nodes in parent coords
        L = lagrange_matrix(nodes, xi)
        L[np.abs(L) < 1e-15] = 0.0
        for e in range(space.mesh.counts[axis]):
            S[fi[e * c + s][:, None], ci[e][None, :]] = L
    return S


class NestedPair:
    """Coarse space and its ``levels``-times uniformly refined counterpart."""

    def __init__(self, coarse: FESpace, levels: int = 1, tol=1e-12, maxiter=200):
        levels = int(levels)
        if levels < 1:
            raise ArgumentError("refinement levels must be >= 1")
        self.coarse, self.levels = coarse, levels
        fmesh = refine_uniform(coarse.mesh, levels)
        self.fine = FESpace(fmesh, coarse.degree, coarse.continuity)
        self.tol, self.maxiter = float(tol), int(maxiter)
        self.S = [injection_matrix_1d(coarse, self.fine, k, levels) for k in range(coarse.dim)]
        self.M_F = MassOperator(self.fine)
        self.M_C = MassOperator(coarse)
        self._diag = mass_diagonal(self.M_C)
        self.last_report = None

    def _tensor(self, x, mats):
        d = len(mats)
        X = np.asarray(x).reshape([m.shape[1] for m in reversed(mats)])
        for k, m in enumerate(mats):
            ax = d - 1 - k
            X = np.moveaxis(np.tensordot(m, X, axes=(1, ax)), 0, ax)
        return X.reshape(-1)

    def inject_vec(self, u):
        return self._tensor(u, self.S)

    def inject_transpose(self, v):
        return self._tensor(v, [m.T for m in self.S])

    def normal_apply(self, x):
        return self.inject_transpose(apply_mass(self.M_F, self.inject_vec(x)))

    def coarsen_vec(self, v):
        b = self.inject_transpose(apply_mass(self.M_F, v))
        x, rep = pcg(self.normal_apply, b, self._diag, tol=self.tol, maxiter=self.maxiter)
        self.last_report = rep
        return x, rep


def inject(pair: NestedPair, u_C) -> Field:
    """The same function expressed in the fine space."""
    if not isinstance(u_C, Field) or u_C.space is not pair.coarse:
        raise ArgumentError("inject expects a Field on the coarse space")
    return Field(pair.fine, pair.inject_vec(u_C.coefficients))


def coarsen(pair: NestedPair, u_F):
    """(coarse Field, SolveReport): L2 projection of u_F onto the coarse space."""
    if not isinstance(u_F, Field) or u_F.space is not pair.fine:
        raise ArgumentError("coarsen expects a Field on the fine space")
    x, rep = pair.coarsen_vec(u_F.coefficients)
    return Field(pair.coarse, x), rep


def run_coarsening_study(f, p=5, refinements=3, levels=1, base=2, dim=2,
                         continuity="H1", tol=1e-12):
    """For r = 0..refinements on the r-times refined base^dim grid: interpolate f on the fine
    space, coarsen, report the error against f and the change in integral."""
    rows = []
    for r in range(int(refinements) + 1):
        mesh = make_cartesian(dim, base * 2 ** r, (0.0, 1.0))
        pair = NestedPair(FESpace(mesh, p, continuity), levels, tol=tol)
        u_h = interpolate_nodal(pair.fine, f)
        u_c, rep = coarsen(pair, u_h)
        rows.append({
            "elements": mesh.num_elements,
            "h": float(mesh.spacings(0)[0]),
            "error": l2_error(u_c, f),
            "conservation": abs(integrate(u_h) - integrate(u_c)),
            "iterations": rep.iterations,
        })
    for a, b in zip(rows, rows[1:]):
        b["rate"] = math.log2(a["error"] / b["error"])
    return rows
