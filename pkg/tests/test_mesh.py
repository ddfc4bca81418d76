import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lortransfer.errors import ArgumentError
from lortransfer.mesh import LorSpec, make_cartesian, make_lor_mesh, refine_uniform


def test_ten_by_ten():
    m = make_cartesian(2, [10, 10], (0.0, 1.0))
    assert m.num_elements == 100
    assert np.allclose(m.spacings(0), 0.1) and np.allclose(m.spacings(1), 0.1)


def test_cube_count():
    assert make_cartesian(3, [4, 4, 4], (0.0, 1.0)).num_elements == 64


def test_single_interval():
    m = make_cartesian(1, [1], (-1.0, 1.0))
    assert m.num_elements == 1 and m.volume() == pytest.approx(2.0)


def test_refine_cube_three_times():
    m = refine_uniform(make_cartesian(3, 4, (0.0, 1.0)), 3)
    assert m.num_elements == 32768


def test_refine_interval():
    m = refine_uniform(make_cartesian(1, 1, (-1.0, 1.0)))
    assert m.num_elements == 2 and np.allclose(m.spacings(0), [1.0, 1.0])


def test_refine_ten_four_times():
    assert refine_uniform(make_cartesian(2, 10, (0.0, 1.0)), 4).counts == (160, 160)


@pytest.mark.parametrize("box", [(1.0, 1.0), (2.0, 1.0), (0.0, float("nan"))])
def test_degenerate_box(box):
    with pytest.raises(ArgumentError):
        make_cartesian(2, 3, box)


def test_bad_counts_and_dim():
    with pytest.raises(ArgumentError):
        make_cartesian(2, [3, 0])
    with pytest.raises(ArgumentError):
        make_cartesian(4, 2)


def test_lor_gl_two():
    m = make_lor_mesh(make_cartesian(1, 1, (-1.0, 1.0)), LorSpec(2))
    assert np.allclose(m.vertices[0], [-1.0, 0.0, 1.0], atol=1e-15)


def test_lor_2d_count():
    m = make_lor_mesh(make_cartesian(2, 1, (0.0, 1.0)), LorSpec(4))
    assert m.num_elements == 16


def test_lor_uniform_thirds():
    m = make_lor_mesh(make_cartesian(1, 1, (0.0, 1.0)), LorSpec(3, "uniform"))
    assert np.allclose(m.vertices[0], [0, 1 / 3, 2 / 3, 1], atol=1e-15)


def test_lor_open_set_rejected():
    with pytest.raises(ArgumentError):
        make_lor_mesh(make_cartesian(1, 2), LorSpec(3, "gauss"))


def test_lor_relation():
    c = make_cartesian(2, 3)
    f = make_lor_mesh(c, LorSpec(3))
    assert f.is_lor_of(c) and not f.is_lor_of(make_cartesian(2, 3))
    assert not refine_uniform(c).is_lor_of(c)


def test_element_index_roundtrip():
    m = make_cartesian(3, [2, 3, 4])
    for e in range(m.num_elements):
        assert m.element_index(*m.element_multi_index(e)) == e
    # x fastest
    assert m.element_multi_index(1) == (1, 0, 0)


@given(st.integers(1, 3), st.lists(st.integers(1, 6), min_size=3, max_size=3),
       st.sampled_from(["gauss-lobatto", "chebyshev-lobatto", "uniform", "augmented-gauss"]),
       st.integers(1, 7))
def test_lor_invariants(dim, counts, kind, n):
    box = [(-0.5, 1.0), (0.0, 2.0), (1.0, 1.25)][:dim]
    c = make_cartesian(dim, counts[:dim], box)
    f = make_lor_mesh(c, LorSpec(n, kind))
    assert f.num_elements == c.num_elements * n ** dim
    assert abs(f.volume() - c.volume()) <= 1e-13 * c.volume()
    assert np.all(f.element_volumes() > 0)
    for k in range(dim):
        # every coarse vertex appears exactly, and at the expected positions
        assert np.array_equal(f.vertices[k][::n], c.vertices[k])


@given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 3))
def test_volume_invariant(dim, n, times):
    m = refine_uniform(make_cartesian(dim, n, (0.0, 3.0)), times)
    assert abs(m.element_volumes().sum() - 3.0 ** dim) <= 1e-13 * 3.0 ** dim
    assert m.num_elements == (n * 2 ** times) ** dim
