"""Kernels against an independent oracle.

The oracle builds 1D global mass matrices by exact integration of products
of Lagrange polynomials (numpy.polynomial) and tensorizes them with
Kronecker products; nothing is shared with the sum-factorized path except
the node positions.
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from lortransfer import kernels
from lortransfer.errors import ArgumentError
from lortransfer.fespace import FESpace, Field, interpolate_nodal
from lortransfer.kernels import (BlockInverse, MassOperator, apply_mass, apply_mass_transpose,
                                 apply_mixed_mass, element_matrices, element_matrix,
                                 mass_diagonal)
from lortransfer.mesh import LorSpec, make_cartesian, make_lor_mesh


def _lagrange_polys(space, axis):
    """Per element along the axis: (a, b, [(global index, Polynomial in xi)])
    with xi the element reference coordinate on [-1, 1]."""
    v = space.mesh.vertices[axis]
    idx = space.axis_index(axis)
    nodes = np.asarray(space.nodes)
    polys = []
    for j in range(len(nodes)):
        others = np.delete(nodes, j)
        P = Polynomial.fromroots(others) if len(others) else Polynomial([1.0])
        polys.append(P / P(nodes[j]))
    return [(v[e], v[e + 1], [(int(idx[e, j]), polys[j]) for j in range(len(nodes))])
            for e in range(len(v) - 1)]


def _mass_1d(row, col, axis):
    """Exact 1D matrix int psi^row_i psi^col_j; rows live on the finer mesh."""
    M = np.zeros((row.axis_size(axis), col.axis_size(axis)))
    cols = _lagrange_polys(col, axis)
    for a, b, rpolys in _lagrange_polys(row, axis):
        mid = 0.5 * (a + b)
        for ca, cb, cpolys in cols:
            if not (ca <= mid <= cb):
                continue
            # row reference xi = (2 t - a - b)/(b - a) with t = ca + (cb - ca)(eta + 1)/2
            lo = (2.0 * a - ca - cb) / (cb - ca)
            hi = (2.0 * b - ca - cb) / (cb - ca)
            to_row = Polynomial([(lo + hi) / (lo - hi), 2.0 / (hi - lo)])
            for i, Pi in rpolys:
                Pr = Pi(to_row)
                for j, Pj in cpolys:
                    I = (Pr * Pj).integ()
                    M[i, j] += 0.5 * (cb - ca) * (I(hi) - I(lo))
    return M


def oracle(row, col=None):
    col = row if col is None else col
    M = np.ones((1, 1))
    for k in range(row.dim):
        M = np.kron(_mass_1d(row, col, k), M)
    return M


def assembled(op):
    """Dense matrix from element blocks scattered with the DOF maps."""
    M = np.zeros(op.shape)
    blocks = element_matrices(op)
    for e in range(op.num_elements):
        M[np.ix_(op.row_map[e], op.col_map[e])] += blocks[e]
    return M


CASES = [(1, 2, 3), (1, 5, 1), (2, [2, 3], 2), (2, 4, 4), (3, 2, 1), (3, [1, 2, 2], 3)]


@pytest.mark.parametrize("dim,counts,p", CASES)
@pytest.mark.parametrize("cont", ["H1", "L2"])
def test_square_mass_matches_oracle(dim, counts, p, cont, backend, rng):
    s = FESpace(make_cartesian(dim, counts, (-0.5, 1.5)), p, cont)
    op = MassOperator(s)
    M = oracle(s)
    for _ in range(5):
        x = rng.standard_normal(s.dof_count)
        y = apply_mass(op, x)
        assert np.linalg.norm(y - M @ x) <= 1e-13 * np.linalg.norm(M @ x)
    assert np.allclose(mass_diagonal(op), np.diag(M), rtol=1e-13, atol=0)


@pytest.mark.parametrize("dim,counts,p", CASES)
@pytest.mark.parametrize("q", [0, 1])
def test_mixed_mass_matches_oracle(dim, counts, p, q, backend, rng):
    mesh = make_cartesian(dim, counts, (0.0, 2.0))
    n = max(1, -(-(p + 1) // (q + 1)))
    high = FESpace(mesh, p, "H1")
    low = FESpace(make_lor_mesh(mesh, LorSpec(n)), q, "L2")
    op = MassOperator(low, high)
    M = oracle(low, high)
    x = rng.standard_normal(high.dof_count)
    z = rng.standard_normal(low.dof_count)
    assert np.linalg.norm(apply_mixed_mass(op, x) - M @ x) <= 1e-13 * np.linalg.norm(M @ x)
    assert np.linalg.norm(apply_mass_transpose(op, z) - M.T @ z) <= 1e-13 * np.linalg.norm(M.T @ z)


@pytest.mark.parametrize("dim,counts,p", [(1, 3, 4), (2, [2, 2], 3), (3, 2, 2), (2, 4, 4)])
def test_apply_matches_element_assembly(dim, counts, p, backend, rng):
    mesh = make_cartesian(dim, counts)
    high = FESpace(mesh, p, "H1")
    low = FESpace(make_lor_mesh(mesh, LorSpec(p + 1)), 0, "L2")
    for op in (MassOperator(high), MassOperator(low, high), MassOperator(low)):
        A = assembled(op)
        x = rng.standard_normal(op.shape[1])
        assert np.linalg.norm(apply_mass(op, x) - A @ x) <= 1e-13 * np.linalg.norm(A @ x)


def test_weighted_matches_element_assembly(backend, rng):
    mesh = make_cartesian(2, 3)
    high = FESpace(mesh, 2, "H1")
    low = FESpace(make_lor_mesh(mesh, LorSpec(3)), 0, "L2")
    rho = interpolate_nodal(high, lambda x, y: 1.5 + np.sin(3 * x) * np.cos(2 * y))
    for op in (MassOperator(high, weight=rho), MassOperator(low, high, weight=rho)):
        A = assembled(op)
        x = rng.standard_normal(op.shape[1])
        assert np.linalg.norm(apply_mass(op, x) - A @ x) <= 1e-13 * np.linalg.norm(A @ x)


def test_unit_weight_equals_unweighted(rng):
    mesh = make_cartesian(2, 2)
    high = FESpace(mesh, 3, "H1")
    low = FESpace(make_lor_mesh(mesh, LorSpec(4)), 0, "L2")
    one = Field(high, np.ones(high.dof_count))
    for a, b in [(MassOperator(high, weight=one), MassOperator(high)),
                 (MassOperator(low, high, weight=one), MassOperator(low, high))]:
        assert np.abs(element_matrices(a) - element_matrices(b)).max() <= 1e-13


def test_nonpositive_weight_rejected():
    s = FESpace(make_cartesian(1, 2), 1)
    with pytest.raises(ArgumentError):
        MassOperator(s, weight=Field(s, np.array([1.0, -1.0, 1.0])))


def test_hat_diagonal():
    s = FESpace(make_cartesian(1, 1, (-1.0, 1.0)), 1)
    assert np.allclose(mass_diagonal(MassOperator(s)), [2 / 3, 2 / 3], atol=1e-15)


def test_degree_zero_diagonal_and_block():
    m = make_cartesian(2, [3, 2], (0.0, 1.5))
    s = FESpace(m, 0, "L2")
    op = MassOperator(s)
    assert np.allclose(mass_diagonal(op), m.element_volumes(), atol=1e-15)
    assert np.allclose(element_matrix(op, 4), [[m.element_volumes()[4]]], atol=1e-15)


def test_mixed_hat_block():
    mesh = make_cartesian(1, 1, (-1.0, 1.0))
    high = FESpace(mesh, 1)
    low = FESpace(make_lor_mesh(mesh, LorSpec(2)), 0, "L2")
    B = element_matrix(MassOperator(low, high), 0)
    assert np.allclose(B, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)


def test_mixed_block_row_sums_are_volumes():
    mesh = make_cartesian(2, 2)
    high = FESpace(mesh, 3)
    low = FESpace(make_lor_mesh(mesh, LorSpec(4)), 0, "L2")
    op = MassOperator(low, high)
    B = element_matrices(op)
    vols = low.mesh.element_volumes()[op.row_map]
    assert np.allclose(B.sum(axis=2), vols, rtol=1e-13)


def test_mixed_entries_are_cell_integrals(rng):
    mesh = make_cartesian(2, 2)
    high = FESpace(mesh, 2)
    low = FESpace(make_lor_mesh(mesh, LorSpec(3)), 0, "L2")
    f = lambda x, y: 1 + x * y - y ** 2
    y = apply_mass(MassOperator(low, high), interpolate_nodal(high, f))
    # exact integral of f over each LOR cell
    X, Y = low.mesh.vertices
    Fx = lambda a, b: b - a
    cells = []
    for j in range(len(Y) - 1):
        for i in range(len(X) - 1):
            x0, x1, y0, y1 = X[i], X[i + 1], Y[j], Y[j + 1]
            val = ((x1 - x0) * (y1 - y0) + (x1 ** 2 - x0 ** 2) / 2 * (y1 ** 2 - y0 ** 2) / 2
                   - (x1 - x0) * (y1 ** 3 - y0 ** 3) / 3)
            cells.append(val)
    assert np.allclose(y.coefficients, cells, atol=1e-15)


def test_volume_from_constant():
    s = FESpace(make_cartesian(2, 3), 3)
    one = np.ones(s.dof_count)
    assert np.dot(one, apply_mass(MassOperator(s), one)) == pytest.approx(1.0, abs=1e-14)


def test_space_mismatch():
    a = FESpace(make_cartesian(1, 2), 1)
    b = FESpace(make_cartesian(1, 2), 1)
    with pytest.raises(ArgumentError):
        apply_mass(MassOperator(a), Field(b, np.zeros(3)))
    with pytest.raises(ArgumentError):
        apply_mass(MassOperator(a), np.zeros(4))
    with pytest.raises(ArgumentError):
        MassOperator(a, b)
    with pytest.raises(ArgumentError):
        apply_mixed_mass(MassOperator(a), np.zeros(3))


def test_element_id_checked():
    op = MassOperator(FESpace(make_cartesian(1, 2), 1))
    with pytest.raises(ArgumentError):
        element_matrix(op, 2)
    with pytest.raises(ArgumentError):
        mass_diagonal(MassOperator(FESpace(make_lor_mesh(op.mesh, LorSpec(2)), 0, "L2"),
                                   op.row))


def test_block_inverse(rng):
    s = FESpace(make_cartesian(2, 3), 2, "L2")
    op = MassOperator(s)
    x = rng.standard_normal(s.dof_count)
    assert np.allclose(BlockInverse(op)(apply_mass(op, x)), x, atol=1e-12)
    with pytest.raises(ArgumentError):
        BlockInverse(MassOperator(FESpace(make_cartesian(2, 3), 2, "H1")))


def test_backends_agree(rng):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    mesh = make_cartesian(3, 2)
    high = FESpace(mesh, 3)
    low = FESpace(make_lor_mesh(mesh, LorSpec(4)), 0, "L2")
    rho = interpolate_nodal(high, lambda x, y, z: 2 + x * y * z)
    for op in (MassOperator(high), MassOperator(low, high, weight=rho)):
        x = rng.standard_normal(op.shape[1])
        a = apply_mass(op, x, backend="compiled")
        b = apply_mass(op, x, backend="python")
        assert np.abs(a - b).max() <= 1e-14 * np.abs(a).max()


def test_set_backend_roundtrip():
    prev = kernels.set_backend("python")
    assert kernels.get_backend() == "python"
    kernels.set_backend(prev)
    with pytest.raises(ArgumentError):
        kernels.set_backend("gpu")


@given(st.integers(1, 3), st.integers(1, 4), st.sampled_from(["H1", "L2"]),
       st.integers(0, 2 ** 31 - 1))
def test_symmetric_positive(dim, p, cont, seed):
    r = np.random.default_rng(seed)
    s = FESpace(make_cartesian(dim, 2, (0.0, 1.0 + r.random())), p, cont)
    op = MassOperator(s)
    x, y = r.standard_normal((2, s.dof_count))
    Mx, My = apply_mass(op, x), apply_mass(op, y)
    assert abs(np.dot(Mx, y) - np.dot(x, My)) <= 1e-12 * np.linalg.norm(x) * np.linalg.norm(y)
    assert np.dot(Mx, x) > 0
