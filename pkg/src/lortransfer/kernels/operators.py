"""Mass and mixed mass operators applied by sum factorization.

An operator loops over the elements of a *partition* mesh. Each space is
seen on that partition through a ``SpaceView``: either the space lives on
the partition mesh itself, or it is an L2 space on a low-order refined
(LOR) mesh of it, in which case the fine elements inside one coarse
element are grouped and the per-axis basis becomes block diagonal.
Quadrature is composite Gauss over the union of all views' breakpoints, so
every integrand is a polynomial on each quadrature cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, UnsupportedError
from ..fespace import FESpace, Field, contract, tensor_dof_map
from ..quadrature import gauss, lagrange_matrix

_ONE = np.ones((1, 1))


def composite_gauss(breaks, npts):
    """Gauss rule with ``npts`` points on each interval of ``breaks`` (reference coords)."""
    q = gauss(int(npts))
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1, None], breaks[1:, None]
    pts = a + (b - a) * 0.5 * (np.asarray(q.points)[None, :] + 1.0)
    w = 0.5 * (b - a) * np.asarray(q.weights)[None, :]
    return pts.ravel(), w.ravel()


@dataclass(frozen=True, eq=False)
class Basis1D:
    """1D factor of a tensor basis seen on one partition element.

    ``B[g, i]`` is local function i at quadrature point g; ``index`` maps
    (element along the axis, local i) to the per-axis global index.
    """

    nodes: np.ndarray
    B: np.ndarray
    index: np.ndarray
    size: int


class SpaceView:
    """A space seen element by element on ``mesh``."""

    def __init__(self, space: FESpace, mesh):
        self.space = space
        self.mesh = mesh
        if space.mesh is mesh:
            self.grouped = False
            self.breaks = np.array([-1.0, 1.0])
            self.n = 1
        elif space.mesh.is_lor_of(mesh):
            if space.is_h1:
                raise UnsupportedError("grouped views need an L2 low-order space")
            self.grouped = True
            self.breaks = space.mesh.lor.reference_points()
            self.n = space.mesh.lor.n
        else:
            raise ArgumentError("space does not live on this mesh or on an LOR refinement of it")

    @property
    def local_size(self):
        return self.n * self.space.local_size

    @property
    def degree(self):
        return self.space.degree

    def basis(self, axis, qpts) -> Basis1D:
        sp = self.space
        a = sp.local_size
        N = self.mesh.counts[axis]
        if not self.grouped:
            B = lagrange_matrix(sp.nodes, qpts)
            return Basis1D(np.array(sp.nodes), B, sp.axis_index(axis), sp.axis_size(axis))
        r = self.breaks
        cell = np.clip(np.searchsorted(r, qpts, side="right") - 1, 0, self.n - 1)
        B = np.zeros((len(qpts), self.n * a))
        nodes = np.empty(self.n * a)
        for s in range(self.n):
            lo, hi = r[s], r[s + 1]
            nodes[s * a:(s + 1) * a] = lo + (hi - lo) * 0.5 * (sp.nodes + 1.0)
            m = cell == s
            if m.any():
                xi = 2.0 * (qpts[m] - lo) / (hi - lo) - 1.0
                B[np.ix_(m, np.arange(s * a, (s + 1) * a))] = lagrange_matrix(sp.nodes, xi)
        index = np.arange(N)[:, None] * (self.n * a) + np.arange(self.n * a)[None, :]
        return Basis1D(nodes, B, index, sp.axis_size(axis))

    def dof_map(self):
        d = self.space.dim
        tables = [self.basis(k, np.zeros(0)).index for k in range(d)]
        return np.ascontiguousarray(tensor_dof_map(tables, self.space.axis_sizes), dtype=np.int64)

    def evaluate(self, coeffs, qpts):
        """Values at the tensor quadrature points of each element, shape (E, G)."""
        d = self.space.dim
        L = self.local_size
        blocks = np.asarray(coeffs)[self.dof_map()].reshape((-1,) + (L,) * d)
        mats = [self.basis(k, qpts).B for k in range(d)]
        vals = contract(blocks, mats)
        return vals.reshape(len(vals), -1)


def _partition(row, col):
    if row.mesh is col.mesh:
        return row.mesh
    if row.mesh.is_lor_of(col.mesh):
        return col.mesh
    if col.mesh.is_lor_of(row.mesh):
        return row.mesh
    raise ArgumentError("spaces live on unrelated meshes")


def _pad3(mats):
    mats = [np.ascontiguousarray(m, dtype=float) for m in mats]
    return tuple(mats + [_ONE] * (3 - len(mats)))


class MassOperator:
    """(M)_{ij} = int rho psi^row_i psi^col_j over the domain.

    ``col`` defaults to ``row`` (square mass). ``weight`` is an optional
    positive density Field sampled at quadrature points.
    """

    def __init__(self, row: FESpace, col: FESpace = None, weight: Field = None,
                 mesh=None, npts=None):
        col = row if col is None else col
        if row.dim != col.dim:
            raise ArgumentError("row and column spaces differ in dimension")
        self.row, self.col, self.weight = row, col, weight
        self.mesh = _partition(row, col) if mesh is None else mesh
        self.row_view = SpaceView(row, self.mesh)
        self.col_view = self.row_view if col is row else SpaceView(col, self.mesh)
        views = [self.row_view, self.col_view]
        dw = 0
        if weight is not None:
            if weight.space.dim != row.dim:
                raise ArgumentError("weight field has the wrong dimension")
            self.weight_view = SpaceView(weight.space, self.mesh)
            views.append(self.weight_view)
            dw = weight.space.degree
        dr, dc = row.degree, col.degree
        if npts is None:
            npts = max(max(dr, dc) + 1, math.ceil((dr + dc + dw + 1) / 2))
        self.npts = int(npts)
        breaks = np.unique(np.concatenate([v.breaks for v in views]))
        self.qpts, self.qw = composite_gauss(breaks, self.npts)
        d = row.dim
        self.row_basis = [self.row_view.basis(k, self.qpts) for k in range(d)]
        self.col_basis = [self.col_view.basis(k, self.qpts) for k in range(d)]
        self.row_map = self.row_view.dof_map()
        self.col_map = self.row_map if self.col_view is self.row_view else self.col_view.dof_map()
        detj = np.ones(1)
        wt = np.ones(())
        for k in range(d):
            detj = np.outer(0.5 * self.mesh.spacings(k), detj).ravel()
            wt = np.multiply.outer(self.qw, wt)
        self.detj = np.ascontiguousarray(detj)
        self.wt = np.ascontiguousarray(wt.ravel())
        self.rho = None
        if weight is not None:
            rho = self.weight_view.evaluate(weight.coefficients, self.qpts)
            if not np.all(rho > 0.0):
                raise ArgumentError(
                    f"density must be positive at every quadrature point (min {rho.min():.3e})")
            self.rho = np.ascontiguousarray(rho)
        self._Brow = _pad3([b.B for b in self.row_basis])
        self._Bcol = _pad3([b.B for b in self.col_basis])

    @property
    def square(self):
        return self.col_view is self.row_view

    @property
    def shape(self):
        return (self.row.dof_count, self.col.dof_count)

    @property
    def num_elements(self):
        return self.mesh.num_elements

    def _run(self, x, transpose, module=None):
        from . import get_module

        k = get_module(module)
        if transpose:
            return k.apply_tensor(x, self.row_map, self._Brow, self.detj, self.wt, self.rho,
                                  self._Bcol, self.col_map, self.col.dof_count)
        return k.apply_tensor(x, self.col_map, self._Bcol, self.detj, self.wt, self.rho,
                              self._Brow, self.row_map, self.row.dof_count)

    def __matmul__(self, x):
        return apply_mass(self, x)


def _coerce(x, space, what):
    if isinstance(x, Field):
        if x.space is not space:
            raise ArgumentError(f"{what}: field lives on a different space")
        return x.coefficients, True
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (space.dof_count,):
        raise ArgumentError(f"{what}: expected length {space.dof_count}, got shape {x.shape}")
    return x, False


def apply_mass(op: MassOperator, x, backend=None):
    """y = M x. Returns a Field on the row space when given a Field."""
    v, wrap = _coerce(x, op.col, "apply_mass")
    y = op._run(np.ascontiguousarray(v), False, backend)
    return Field(op.row, y) if wrap else y


def apply_mixed_mass(op: MassOperator, x, backend=None):
    """y = M_LH x for a mixed (rectangular) operator."""
    if op.square:
        raise ArgumentError("apply_mixed_mass needs a mixed operator (two spaces)")
    return apply_mass(op, x, backend)


def apply_mass_transpose(op: MassOperator, x, backend=None):
    """y = M^T x (column space)."""
    v, wrap = _coerce(x, op.row, "apply_mass_transpose")
    y = op._run(np.ascontiguousarray(v), True, backend)
    return Field(op.col, y) if wrap else y


def mass_diagonal(op: MassOperator, backend=None):
    """Exact diagonal of an assembled square operator."""
    from . import get_module

    if not op.square:
        raise ArgumentError("mass_diagonal needs a square operator")
    k = get_module(backend)
    ones = tuple(np.ones((b.shape[0], 1)) for b in op._Brow)
    sq = tuple(b * b for b in op._Brow)
    zero_map = np.zeros((op.num_elements, 1), dtype=np.int64)
    return k.apply_tensor(np.ones(1), zero_map, ones, op.detj, op.wt, op.rho,
                          sq, op.row_map, op.row.dof_count)


def element_matrices(op: MassOperator, elements=None, chunk=4096):
    """Dense element blocks, shape (nE, A_row, A_col)."""
    E = op.num_elements
    sel = np.arange(E) if elements is None else np.asarray(elements, dtype=np.int64).ravel()
    if sel.size and (sel.min() < 0 or sel.max() >= E):
        raise ArgumentError(f"element id out of range [0, {E})")
    d = op.row.dim
    Ac, Ar = op.col_map.shape[1], op.row_map.shape[1]
    ac = op.col_view.local_size
    ar = op.row_view.local_size
    G = op.wt.size
    # identity columns pushed to quadrature points once (B does not vary by element)
    eye = np.eye(Ac).reshape((Ac,) + (ac,) * d)
    U = contract(eye, [b.B for b in op.col_basis]).reshape(Ac, G)
    backT = [b.B.T for b in op.row_basis]
    if op.rho is None:
        ref = contract((U * op.wt[None, :]).reshape((Ac,) + tuple(
            len(op.qpts) for _ in range(d))), backT).reshape(Ac, Ar).T
        return op.detj[sel, None, None] * ref[None]
    out = np.empty((len(sel), Ar, Ac))
    qshape = (len(op.qpts),) * d
    for s in range(0, len(sel), chunk):
        idx = sel[s:s + chunk]
        S = op.rho[idx] * (op.detj[idx, None] * op.wt[None, :])        # (m, G)
        T = (U[None, :, :] * S[:, None, :]).reshape((len(idx) * Ac,) + qshape)
        V = contract(T, backT).reshape(len(idx), Ac, Ar)
        out[s:s + chunk] = V.transpose(0, 2, 1)
    return out


def element_matrix(op: MassOperator, element: int):
    E = op.num_elements
    if not (0 <= int(element) < E):
        raise ArgumentError(f"element id {element} out of range [0, {E})")
    return element_matrices(op, [int(element)])[0]


class BlockInverse:
    """Inverse of a square L2 mass operator, one dense block per element."""

    def __init__(self, op: MassOperator):
        if not op.square or op.row.is_h1:
            raise ArgumentError("block inverse needs a square operator on an L2 space")
        self.op = op
        self.map = op.row_map
        blocks = element_matrices(op)
        if blocks.shape[1] == 1:
            self.inv = 1.0 / blocks[:, 0, 0]
        else:
            self.inv = np.linalg.inv(blocks)

    def __call__(self, b):
        b = np.asarray(b)
        x = np.empty_like(b, dtype=float)
        if self.inv.ndim == 1:
            x[self.map[:, 0]] = self.inv * b[self.map[:, 0]]
        else:
            x[self.map] = np.einsum("eij,ej->ei", self.inv, b[self.map])
        return x
