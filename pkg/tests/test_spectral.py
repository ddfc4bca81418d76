import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lortransfer.errors import ArgumentError
from lortransfer.mesh import make_cartesian
from lortransfer.spectral import (Method, SWEEP_KINDS, lower_bound_alpha, mixed_block_rank,
                                  mixed_block_singular_values, node_set_sweep,
                                  norm_equivalence_check, norm_equivalence_extremes,
                                  single_element_pair)
from lortransfer.transfer import lor_pair

# Frozen dense-eigensolve baselines: 1D single element on [-1, 1], q = 0,
# n = p + 1, scipy.linalg.eigh on the pencil (R^T M_L R, M_H), p = 2..32.
# Recompute with node_set_sweep(kind) if the pencil definition changes.
ALPHA_MIN = {"gauss-lobatto": 0.6554329010156568,       # at p = 32
             "chebyshev-lobatto": 0.6902455799414996,   # at p = 32
             "augmented-gauss": 0.6599838386821021}     # at p = 32
ALPHA_GL = {4: 0.7461899137779294, 16: 0.6723170972892352}
ALPHA_UNIFORM = {4: 0.4126201438179673, 16: 0.0008446760084215604}
# Exact extremes of ||v_L|| / ||v|| over degree 15 polynomials, GL mesh with 16 cells.
NORM_EQ_16 = (0.674439184100757, 1.0)


def test_piecewise_constant_identity():
    rep = lower_bound_alpha(single_element_pair(0, 1))
    assert rep.alpha == pytest.approx(1.0, abs=1e-14)
    assert rep.beta == pytest.approx(1.0, abs=1e-14)
    assert rep.kappa == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("p", [4, 16])
def test_frozen_gauss_lobatto_values(p):
    assert lower_bound_alpha(single_element_pair(p)).alpha == pytest.approx(ALPHA_GL[p], rel=1e-9)


def test_gauss_lobatto_bounded():
    a = [r["alpha"] for r in node_set_sweep("gauss-lobatto")]
    assert max(a) / min(a) < 2.0
    assert min(a) >= 0.9 * ALPHA_MIN["gauss-lobatto"]


def test_uniform_decays():
    rows = node_set_sweep("uniform", ps=range(4, 21))
    a = np.array([r["alpha"] for r in rows])
    assert np.all(np.diff(a) < 0)
    assert a[12] / a[0] <= 0.1
    assert a[0] == pytest.approx(ALPHA_UNIFORM[4], rel=1e-9)
    assert a[12] == pytest.approx(ALPHA_UNIFORM[16], rel=1e-6)


def test_sweep_rows():
    rows = node_set_sweep(SWEEP_KINDS, ps=[2, 3])
    assert [(r["kind"], r["p"]) for r in rows][:2] == [("gauss-lobatto", 2), ("gauss-lobatto", 3)]
    assert len(rows) == 2 * len(SWEEP_KINDS)
    for r in rows:
        assert 0 < r["alpha"] <= r["beta"] <= 1 + 1e-10
        assert r["kappa"] == pytest.approx((r["beta"] / r["alpha"]) ** 2)


@pytest.mark.parametrize("cont", ["H1", "L2"])
def test_dense_and_power_agree(cont):
    pair = lor_pair(make_cartesian(2, 2), 3, 0, continuity=cont)
    d = lower_bound_alpha(pair, "dense")
    p = lower_bound_alpha(pair, Method.POWER)
    assert p.method is Method.POWER and p.iterations > 0
    assert abs(p.alpha - d.alpha) <= 1e-8 * d.alpha
    assert abs(p.beta - d.beta) <= 1e-8 * d.beta


def test_method_parse():
    assert Method.parse("DenseEig") is Method.DENSE
    assert Method.parse("PowerIteration") is Method.POWER
    with pytest.raises(ArgumentError):
        Method.parse("qr")


def test_dense_limit():
    pair = lor_pair(make_cartesian(2, 16), 3, 0)
    assert pair.high.dof_count > 2000
    with pytest.raises(ArgumentError):
        lower_bound_alpha(pair, "dense")


def test_norm_equivalence_linear():
    lo, hi = norm_equivalence_extremes(2)
    assert lo == pytest.approx(math.sqrt(3) / 2, abs=1e-14)
    assert hi == pytest.approx(1.0, abs=1e-14)
    slo, shi = norm_equivalence_check(2)
    assert lo - 1e-14 <= slo <= shi <= hi + 1e-14


def test_norm_equivalence_constant():
    assert norm_equivalence_extremes(1) == pytest.approx((1.0, 1.0), abs=1e-14)


def test_norm_equivalence_degree_16():
    lo, hi = norm_equivalence_extremes(16)
    assert (lo, hi) == pytest.approx(NORM_EQ_16, abs=1e-10)
    slo, shi = norm_equivalence_check(16)
    assert 0.3 < lo - 1e-12 <= slo <= shi <= hi + 1e-12 < 1.5


def test_norm_equivalence_errors():
    with pytest.raises(ArgumentError):
        norm_equivalence_check(33)
    with pytest.raises(ArgumentError):
        norm_equivalence_check(4, "gauss")


@pytest.mark.parametrize("p,n,q", [(3, 4, 0), (5, 6, 0), (5, 4, 2), (5, 2, 2), (3, 2, 1)])
def test_full_rank_when_compatible(p, n, q):
    assert n * (q + 1) >= p + 1
    assert mixed_block_singular_values(p, n, q).min() > 1e-10
    assert mixed_block_rank(p, n, q) == p + 1


@pytest.mark.parametrize("p,n", [(3, 2), (5, 3), (5, 5), (8, 4)])
def test_rank_deficient_when_incompatible(p, n):
    assert mixed_block_rank(p, n, 0) == n


@given(st.integers(1, 12), st.sampled_from(["gauss-lobatto", "chebyshev-lobatto", "uniform"]))
def test_alpha_in_unit_interval(p, kind):
    rep = lower_bound_alpha(single_element_pair(p, nodes=kind))
    assert 0 < rep.alpha <= rep.beta <= 1 + 1e-10
