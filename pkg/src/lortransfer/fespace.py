"""Nodal H1 / L2 finite element spaces on Cartesian meshes.

Basis functions are tensor products of 1D Lagrange polynomials on the
Gauss-Lobatto points of the element degree (degree 0 is the constant).
Global DOFs are tensor products of per-axis indices, x fastest:

  H1:  axis index = e * p + i,          axis size = N p + 1
  L2:  axis index = e * (p + 1) + i,    axis size = N (p + 1)

so a DOF's position in the global vector follows node coordinates axis by
axis (duplicated interface nodes of L2 spaces are ordered by element).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ArgumentError
from .mesh import CartesianMesh
from .quadrature import gauss, gauss_lobatto, lagrange_matrix

__all__ = [
    "Continuity",
    "FESpace",
    "Field",
    "project_l2",
    "interpolate_nodal",
    "integrate",
    "l2_error",
    "evaluate_points",
    "write_field_csv",
]


class Continuity(str, Enum):
    H1 = "H1"
    L2 = "L2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ArgumentError(f"unknown continuity {value!r}") from None


def _freeze(a):
    a.flags.writeable = False
    return a


def reference_nodes(degree):
    if degree == 0:
        return np.zeros(1)
    return np.array(gauss_lobatto(degree).points)


class FESpace:
    """Scalar nodal space of a given degree and continuity on a mesh."""

    def __init__(self, mesh: CartesianMesh, degree: int, continuity="H1"):
        if not isinstance(mesh, CartesianMesh):
            raise ArgumentError("mesh must be a CartesianMesh")
        degree = int(degree)
        continuity = Continuity.parse(continuity)
        if degree < 0:
            raise ArgumentError(f"degree must be >= 0, got {degree}")
        if degree == 0 and continuity is Continuity.H1:
            raise ArgumentError("degree 0 requires L2 continuity")
        self.mesh = mesh
        self.degree = degree
        self.continuity = continuity
        self.nodes = _freeze(reference_nodes(degree))

    @property
    def dim(self):
        return self.mesh.dim

    @property
    def is_h1(self):
        return self.continuity is Continuity.H1

    @property
    def local_size(self):
        """Nodes per axis per element."""
        return self.degree + 1

    def axis_size(self, axis):
        n = self.mesh.counts[axis]
        return n * self.degree + 1 if self.is_h1 else n * (self.degree + 1)

    def axis_index(self, axis):
        """(N, a) table of per-axis global indices."""
        n, a = self.mesh.counts[axis], self.local_size
        step = self.degree if self.is_h1 else a
        return np.arange(n)[:, None] * step + np.arange(a)[None, :]

    @cached_property
    def axis_sizes(self):
        return tuple(self.axis_size(k) for k in range(self.dim))

    @cached_property
    def dof_count(self):
        return int(np.prod(self.axis_sizes))

    @property
    def ndofs(self):
        return self.dof_count

    def axis_coords(self, axis):
        """Physical coordinate of every per-axis global index."""
        v = self.mesh.vertices[axis]
        pts = v[:-1, None] + np.diff(v)[:, None] * 0.5 * (self.nodes[None, :] + 1.0)
        if self.degree > 0:
            pts[:, 0], pts[:, -1] = v[:-1], v[1:]
        out = np.empty(self.axis_size(axis))
        out[self.axis_index(axis).ravel()] = pts.ravel()
        return out

    @cached_property
    def element_dofs(self):
        """(E, a^d) global DOFs per element, local index ix + a (iy + a iz)."""
        return _freeze(tensor_dof_map([self.axis_index(k) for k in range(self.dim)],
                                      self.axis_sizes))

    def axis_integrals(self, axis):
        """Per-axis vector of integrals of the 1D global basis functions."""
        a = self.local_size
        g = gauss(a)
        B = lagrange_matrix(self.nodes, g.points)
        w_ref = B.T @ g.weights
        h = self.mesh.spacings(axis)
        out = np.zeros(self.axis_size(axis))
        np.add.at(out, self.axis_index(axis).ravel(), (0.5 * h[:, None] * w_ref[None, :]).ravel())
        return out

    def field(self, values=None):
        if values is None:
            values = np.zeros(self.dof_count)
        return Field(self, values)

    def __repr__(self):
        return (f"FESpace({self.continuity.value}, degree={self.degree}, "
                f"counts={self.mesh.counts}, dofs={self.dof_count})")


def tensor_dof_map(axis_tables, axis_sizes):
    """Combine per-axis (N_k, a_k) index tables into an (E, prod a_k) map.

    Elements are x fastest, local indices x fastest.
    """
    d = len(axis_tables)
    idx = np.zeros((1, 1), dtype=np.int64)
    stride = 1
    for k in range(d):
        t = np.asarray(axis_tables[k], dtype=np.int64) * stride
        # new element index = e_k * E_prev + e_prev ; local = i_k * A_prev + i_prev
        idx = (t[:, None, :, None] + idx[None, :, None, :])
        idx = idx.reshape(t.shape[0] * idx.shape[1], t.shape[1] * idx.shape[3])
        stride *= int(axis_sizes[k])
    return idx


@dataclass(eq=False)
class Field:
    space: FESpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.space.dof_count,):
            raise ArgumentError(
                f"expected {self.space.dof_count} coefficients, got shape {c.shape}")
        self.coefficients = c

    @property
    def values(self):
        return self.coefficients

    def copy(self):
        return Field(self.space, self.coefficients.copy())


# ---------------------------------------------------------------- helpers

def gather(space, coeffs):
    """Element coefficient blocks, shape (E, a_z, a_y, a_x) (only the mesh's axes)."""
    a = space.local_size
    return np.asarray(coeffs)[space.element_dofs].reshape((-1,) + (a,) * space.dim)


def contract(X, mats):
    """Apply mats[k] (g_k x a_k) along axis k of element blocks (x is the last array axis)."""
    d = len(mats)
    for k, B in enumerate(mats):
        ax = X.ndim - 1 - k
        X = np.moveaxis(np.tensordot(B, X, axes=([1], [ax])), 0, ax)
    assert X.ndim == d + 1
    return X


def _tensor_points(mesh, ref):
    """Physical quadrature points per axis, shape (N_k, g) each."""
    out = []
    for k in range(mesh.dim):
        v = mesh.vertices[k]
        out.append(v[:-1, None] + np.diff(v)[:, None] * 0.5 * (ref[None, :] + 1.0))
    return out


def eval_on_elements(f, mesh, ref):
    """f at the tensor quadrature points of every element: (E, g, ..., g), x last."""
    d, g = mesh.dim, len(ref)
    pts = _tensor_points(mesh, ref)
    grids = []
    for k in range(d):
        shape = [1] * d
        shape[d - 1 - k] = -1
        grids.append(pts[k].ravel().reshape(shape))
    vals = np.asarray(f(*grids), dtype=float)
    full = tuple(mesh.counts[k] * g for k in reversed(range(d)))
    vals = np.broadcast_to(vals, full)
    # (N_z, g, N_y, g, N_x, g) -> (N_z, N_y, N_x, g, g, g)
    split = []
    for k in reversed(range(d)):
        split += [mesh.counts[k], g]
    vals = vals.reshape(split)
    perm = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
    return np.array(vals.transpose(perm).reshape((mesh.num_elements,) + (g,) * d))


def _weights_on_elements(mesh, w):
    """detJ * tensor weights, shape (E, g, ..., g)."""
    d = mesh.dim
    detj = np.ones(1)
    wt = np.ones(())
    for k in range(d):
        detj = np.outer(0.5 * mesh.spacings(k), detj).ravel()
        wt = np.multiply.outer(w, wt)
    return detj.reshape((-1,) + (1,) * d) * wt[None]


def _check_callable(f):
    if not callable(f):
        raise ArgumentError("expected a callable f(x[, y[, z]])")


# ---------------------------------------------------------------- operations

def interpolate_nodal(space: FESpace, f) -> Field:
    """Nodal interpolant: coefficients are f at the mapped basis nodes."""
    _check_callable(f)
    if space.degree == 0:
        raise ArgumentError("degree-0 spaces have no nodal interpolant; use project_l2")
    d = space.dim
    grids = []
    for k in range(d):
        shape = [1] * d
        shape[d - 1 - k] = -1
        grids.append(space.axis_coords(k).reshape(shape))
    vals = np.broadcast_to(np.asarray(f(*grids), dtype=float),
                           tuple(reversed(space.axis_sizes)))
    return Field(space, vals.ravel().copy())


def integrate(field: Field) -> float:
    """Exact integral of a field over the mesh domain."""
    space = field.space
    u = field.coefficients.reshape(tuple(reversed(space.axis_sizes)))
    for k in range(space.dim):
        u = u @ space.axis_integrals(k)
    return float(u)


def l2_error(field: Field, f) -> float:
    """||field - f||_0 with degree + 3 Gauss points per axis per element."""
    _check_callable(f)
    space = field.space
    q = gauss(space.degree + 3)
    B = lagrange_matrix(space.nodes, q.points)
    uq = contract(gather(space, field.coefficients), [B] * space.dim)
    fq = eval_on_elements(f, space.mesh, np.asarray(q.points))
    w = _weights_on_elements(space.mesh, np.asarray(q.weights))
    return float(np.sqrt(np.sum(w * (uq - fq) ** 2)))


def load_vector(space: FESpace, f, npts=None):
    """b_i = int f psi_i with ``npts`` Gauss points per axis (default degree + 2)."""
    _check_callable(f)
    q = gauss(space.degree + 2 if npts is None else int(npts))
    B = lagrange_matrix(space.nodes, q.points)
    fq = eval_on_elements(f, space.mesh, np.asarray(q.points))
    fq *= _weights_on_elements(space.mesh, np.asarray(q.weights))
    local = contract(fq, [B.T] * space.dim)
    return np.bincount(space.element_dofs.ravel(), local.reshape(len(local), -1).ravel(),
                       minlength=space.dof_count)


def project_l2(space: FESpace, f, tol=1e-13, maxiter=500, npts=None) -> Field:
    """L2 projection of f onto the space.

    The right-hand side uses ``npts`` Gauss points per axis per element
    (default degree + 2). L2 spaces are solved element by element; H1 spaces
    by CG preconditioned with the mass diagonal.
    """
    b = load_vector(space, f, npts)
    if not space.is_h1:
        return Field(space, l2_block_solve(space, b))
    from .kernels import MassOperator, apply_mass, mass_diagonal
    from .solvers import pcg

    op = MassOperator(space)
    x, _ = pcg(lambda v: apply_mass(op, v), b, mass_diagonal(op), tol=tol, maxiter=maxiter)
    return Field(space, x)


def l2_block_solve(space: FESpace, b):
    """Solve M x = b for an (unweighted) L2 space using the per-axis tensor structure."""
    a, d = space.local_size, space.dim
    q = gauss(a)
    B = lagrange_matrix(space.nodes, q.points)
    Minv = np.linalg.inv(B.T @ (q.weights[:, None] * B))
    blocks = np.asarray(b)[space.element_dofs].reshape((-1,) + (a,) * d)
    x = contract(blocks, [Minv] * d)
    x /= _weights_on_elements(space.mesh, np.ones(1)).reshape((-1,) + (1,) * d)
    out = np.empty(space.dof_count)
    out[space.element_dofs.ravel()] = x.reshape(-1)
    return out


def evaluate_points(field: Field, points, side="left"):
    """Evaluate a field at physical points (shape (m, d)).

    Points on an element interface belong to the element on ``side``.
    """
    space = field.space
    mesh = space.mesh
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != mesh.dim:
        raise ArgumentError(f"points must have {mesh.dim} columns")
    m = len(pts)
    eidx, mats = [], []
    for k in range(mesh.dim):
        v = mesh.vertices[k]
        if side == "left":
            e = np.searchsorted(v, pts[:, k], side="left") - 1
        else:
            e = np.searchsorted(v, pts[:, k], side="right") - 1
        e = np.clip(e, 0, len(v) - 2)
        xi = 2.0 * (pts[:, k] - v[e]) / (v[e + 1] - v[e]) - 1.0
        eidx.append(e)
        mats.append(lagrange_matrix(space.nodes, xi))
    elem = mesh.element_index(*eidx)
    coeff = field.coefficients[space.element_dofs[elem]]  # (m, a^d)
    basis = np.ones((m, 1))
    for k in range(mesh.dim):
        basis = (mats[k][:, :, None] * basis[:, None, :]).reshape(m, -1)
    return np.sum(coeff * basis, axis=1)


def write_field_csv(field: Field, fh=None):
    """Write (global_dof, x, y, z, value) rows; returns the text when fh is None."""
    space = field.space
    d = space.dim
    coords = [space.axis_coords(k) for k in range(d)]
    sizes = space.axis_sizes
    own = fh is None
    fh = io.StringIO() if own else fh
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["global_dof", "x", "y", "z", "value"])
    idx = np.arange(space.dof_count)
    per_axis = []
    rem = idx
    for k in range(d):
        per_axis.append(rem % sizes[k])
        rem = rem // sizes[k]
    for i in idx:
        xyz = [repr(float(coords[k][per_axis[k][i]])) for k in range(d)] + [""] * (3 - d)
        w.writerow([int(i)] + xyz + [repr(float(field.coefficients[i]))])
    return fh.getvalue() if own else None
