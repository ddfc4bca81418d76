"""Experiment drivers shared by the command line and the acceptance tests.

Each driver returns a list of row dicts; ``add_rates`` appends observed
convergence rates log2(e_coarse / e_fine) between consecutive rows.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError
from .fespace import Field, integrate, interpolate_nodal, l2_error, project_l2
from .mesh import make_cartesian, refine_uniform
from .transfer import density_from_high, lor_pair, make_pair, minimal_lor_n, prolong, restrict

__all__ = ["smooth_2d", "smooth_3d", "add_rates", "transfer_study", "precondition_study"]


def smooth_2d(x, y):
    return np.exp(0.1 * np.sin(5.1 * x - 6.2 * y) + 0.3 * np.cos(4.3 * x + 3.4 * y))


def smooth_3d(x, y, z):
    return np.exp(0.1 * np.sin(5.1 * x - 6.2 * y + 3.3 * z) + 0.3 * np.cos(4.3 * x + 3.4 * y - 2.7 * z))


def add_rates(rows, keys):
    for a, b in zip(rows, rows[1:]):
        for k in keys:
            ea, eb = a[k], b[k]
            b[f"rate_{k}"] = math.log2(ea / eb) if ea > 0 and eb > 0 else float("nan")
    return rows


def _density(dim):
    if dim == 2:
        return lambda x, y: 1.0 + 0.5 * np.sin(2.0 * x + 1.0) * np.cos(3.0 * y)
    if dim == 3:
        return lambda x, y, z: 1.0 + 0.5 * np.sin(2.0 * x + 1.0) * np.cos(3.0 * y) * np.cos(z)
    return lambda x: 1.0 + 0.5 * np.sin(2.0 * x + 1.0)


def transfer_study(p=2, q=0, lor_n=None, nodes="gauss-lobatto", refinements=4, dim=2,
                   base=2, continuity="H1", weighted=False, f=None, tol=1e-12,
                   box=(0.0, 1.0)):
    """Errors of R and P applied to projections of a smooth f under uniform
    refinement (levels 0..refinements) of a base^dim grid; ``base`` may give
    one count per axis.

    The LOR data is projected with p + 2 points per cell so that projection
    quadrature error stays below the degree p + 1 error of P.
    """
    if int(refinements) < 0:
        raise ArgumentError("refinements must be >= 0")
    if f is None:
        f = {2: smooth_2d, 3: smooth_3d}.get(dim)
        if f is None:
            raise ArgumentError("no default test function in this dimension")
    n = minimal_lor_n(p, q) if lor_n is None else int(lor_n)
    coarse = make_cartesian(dim, base, box)
    rows = []
    for r in range(int(refinements) + 1):
        mesh = refine_uniform(coarse, r)
        pair = lor_pair(mesh, p, q, n, nodes, continuity, tol=tol)
        if weighted:
            rho_H, rho_L = density_from_high(interpolate_nodal(pair.high, _density(dim)), pair.low)
            pair = make_pair(pair.high, pair.low, n, (rho_H, rho_L), tol=tol)
        uH = project_l2(pair.high, f, npts=p + 2)
        uL = project_l2(pair.low, f, npts=p + 2)
        RuH = restrict(pair, uH)
        PuL, rep = prolong(pair, uL)
        rows.append({
            "h": float(mesh.spacings(0)[0]),
            "dof_H": pair.high.dof_count,
            "dof_L": pair.low.dof_count,
            "err_PiH": l2_error(uH, f),
            "err_R_PiH": l2_error(RuH, f),
            "err_PiL": l2_error(uL, f),
            "err_P_PiL": l2_error(PuL, f),
            "cons_R": abs(integrate(RuH) - integrate(uH)),
            "cons_P": abs(integrate(PuL) - integrate(uL)),
            "cg_iters": rep.iterations,
        })
    return add_rates(rows, ["err_PiH", "err_R_PiH", "err_PiL", "err_P_PiL"])


def precondition_study(ps=range(1, 6), qs=(0, 1), refinements=3, base=4, dim=2,
                       nodes="gauss-lobatto", f=None, tol=1e-12):
    """CG iterations for P v with v the LOR projection of a smooth f.

    n = p + 1 subdivisions for every q, so the LOR mesh is the same for
    q = 0 and q = 1 and only the low-order degree changes.
    """
    f = smooth_2d if f is None else f
    coarse = make_cartesian(dim, base, (0.0, 1.0))
    rows = []
    for q in qs:
        for r in range(int(refinements) + 1):
            mesh = refine_uniform(coarse, r)
            for p in ps:
                pair = lor_pair(mesh, int(p), int(q), int(p) + 1, nodes, tol=tol)
                v = project_l2(pair.low, f, npts=int(p) + 2)
                _, rep = prolong(pair, v)
                rows.append({"q": int(q), "refinement": r, "p": int(p),
                             "dof_H": pair.high.dof_count, "iterations": rep.iterations,
                             "residual": rep.residual})
    return rows
