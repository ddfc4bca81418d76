import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lortransfer.amr import NestedPair, coarsen, inject, injection_matrix_1d, run_coarsening_study
from lortransfer.errors import ArgumentError
from lortransfer.fespace import FESpace, Field, evaluate_points, integrate, interpolate_nodal
from lortransfer.mesh import make_cartesian


def pair(dim=2, p=3, cont="H1", levels=1, counts=2):
    return NestedPair(FESpace(make_cartesian(dim, counts), p, cont), levels)


@pytest.mark.parametrize("cont", ["H1", "L2"])
@pytest.mark.parametrize("levels", [1, 2])
def test_injection_is_exact(cont, levels, rng):
    pr = pair(2, 3, cont, levels)
    u = Field(pr.coarse, rng.standard_normal(pr.coarse.dof_count))
    uf = inject(pr, u)
    pts = rng.random((50, 2))
    assert np.allclose(evaluate_points(uf, pts), evaluate_points(u, pts), atol=1e-12)
    assert integrate(uf) == pytest.approx(integrate(u), abs=1e-13)


@pytest.mark.parametrize("k", range(4))
def test_monomials_reproduced(k):
    pr = pair(1, 3, "H1", 2)
    f = lambda x: x ** k
    assert np.allclose(inject(pr, interpolate_nodal(pr.coarse, f)).coefficients,
                       interpolate_nodal(pr.fine, f).coefficients, atol=1e-14)


def test_injection_rows_partition_unity():
    pr = pair(1, 4, "H1", 1, counts=3)
    S = injection_matrix_1d(pr.coarse, pr.fine, 0, 1)
    assert S.shape == (pr.fine.axis_size(0), pr.coarse.axis_size(0))
    assert np.allclose(S.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("cont", ["H1", "L2"])
def test_left_inverse_and_conservation(cont, rng):
    pr = pair(2, 4, cont)
    u = Field(pr.coarse, rng.standard_normal(pr.coarse.dof_count))
    back, rep = coarsen(pr, inject(pr, u))
    assert rep.converged
    assert np.abs(back.coefficients - u.coefficients).max() <= 1e-11 * np.abs(u.coefficients).max()
    v = Field(pr.fine, rng.standard_normal(pr.fine.dof_count))
    cv, _ = coarsen(pr, v)
    assert abs(integrate(cv) - integrate(v)) <= 1e-12 * (1 + abs(integrate(v)))


def test_projection_idempotent(rng):
    pr = pair(2, 3, "H1", 2)
    v = Field(pr.fine, rng.standard_normal(pr.fine.dof_count))
    w = inject(pr, coarsen(pr, v)[0])
    ww = inject(pr, coarsen(pr, w)[0])
    assert np.abs(ww.coefficients - w.coefficients).max() <= 1e-11 * np.abs(v.coefficients).max()


def test_errors():
    pr = pair(1, 2)
    with pytest.raises(ArgumentError):
        NestedPair(pr.coarse, 0)
    with pytest.raises(ArgumentError):
        inject(pr, Field(pr.fine, np.zeros(pr.fine.dof_count)))
    with pytest.raises(ArgumentError):
        coarsen(pr, np.zeros(pr.fine.dof_count))


def test_study_rows():
    f = lambda x, y: np.sin(3 * x) * np.cos(2 * y)
    rows = run_coarsening_study(f, p=2, refinements=2)
    assert [r["elements"] for r in rows] == [4, 16, 64]
    assert "rate" not in rows[0] and all("rate" in r for r in rows[1:])
    assert rows[-1]["rate"] == pytest.approx(3.0, abs=0.3)
    assert max(r["conservation"] for r in rows) <= 1e-12


@settings(max_examples=10)
@given(st.integers(1, 3), st.integers(1, 4), st.sampled_from(["H1", "L2"]),
       st.integers(0, 2 ** 31 - 1))
def test_coarsen_inject_identity(dim, p, cont, seed):
    rng = np.random.default_rng(seed)
    pr = NestedPair(FESpace(make_cartesian(dim, 2), p, cont))
    u = Field(pr.coarse, rng.standard_normal(pr.coarse.dof_count))
    back, _ = coarsen(pr, inject(pr, u))
    assert np.abs(back.coefficients - u.coefficients).max() <= 1e-10 * np.abs(u.coefficients).max()
