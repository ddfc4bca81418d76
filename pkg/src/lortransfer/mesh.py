"""Axis-separable Cartesian meshes in one to three dimensions.

A mesh is stored as one strictly increasing vertex array per axis.
Elements are numbered lexicographically with x fastest:
``e = ex + nx * (ey + ny * ez)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError
from .quadrature import RuleKind, make_rule

__all__ = ["CartesianMesh", "LorSpec", "make_cartesian", "refine_uniform", "make_lor_mesh"]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LorSpec:
    """Subdivide each coarse element into ``n`` pieces per axis at ``node_set`` points."""

    n: int
    node_set: RuleKind = RuleKind.GAUSS_LOBATTO

    def __post_init__(self):
        object.__setattr__(self, "node_set", RuleKind.parse(self.node_set))
        if int(self.n) < 1:
            raise ArgumentError(f"LOR subdivision count must be >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def reference_points(self):
        """Split positions on [-1, 1] (n + 1 values, endpoints exact)."""
        if not self.node_set.closed:
            raise ArgumentError(f"LOR node set must be closed, got {self.node_set.value}")
        pts = np.array(make_rule(self.node_set, self.n).points)
        if len(pts) != self.n + 1:  # pragma: no cover - guarded by make_rule
            raise ArgumentError("node set does not have n + 1 points")
        pts[0], pts[-1] = -1.0, 1.0
        return pts


@dataclass(frozen=True, eq=False)
class CartesianMesh:
    vertices: tuple
    parent: Optional["CartesianMesh"] = field(default=None, repr=False)
    lor: Optional[LorSpec] = None

    @property
    def dim(self):
        return len(self.vertices)

    @property
    def counts(self):
        return tuple(len(v) - 1 for v in self.vertices)

    @property
    def num_elements(self):
        return int(np.prod(self.counts))

    @property
    def box(self):
        return tuple((float(v[0]), float(v[-1])) for v in self.vertices)

    def spacings(self, axis):
        return np.diff(self.vertices[axis])

    def volume(self):
        return float(np.prod([hi - lo for lo, hi in self.box]))

    def element_volumes(self):
        """Element volumes in lexicographic (x fastest) order."""
        vol = np.ones(1)
        for axis in range(self.dim):
            vol = np.outer(self.spacings(axis), vol).ravel()
        return vol

    def element_index(self, *idx):
        e, stride = 0, 1
        for axis, i in enumerate(idx):
            e = e + np.asarray(i) * stride
            stride *= self.counts[axis]
        return e

    def element_multi_index(self, e):
        out, e = [], np.asarray(e)
        for n in self.counts:
            out.append(e % n)
            e = e // n
        return tuple(out)

    def centers(self, axis):
        v = self.vertices[axis]
        return 0.5 * (v[1:] + v[:-1])

    def is_lor_of(self, coarse):
        return self.parent is coarse and self.lor is not None

    def __repr__(self):
        return f"CartesianMesh(dim={self.dim}, counts={self.counts}, box={self.box})"


def _check_vertices(vertices):
    for v in vertices:
        if len(v) < 2 or not np.all(np.diff(v) > 0):
            raise ArgumentError("vertex coordinates must be strictly increasing")


def make_cartesian(dim, counts, box=None) -> CartesianMesh:
    """Uniform mesh. ``counts`` is an int or one int per axis; ``box`` a
    single (lo, hi) pair used on every axis or one pair per axis."""
    dim = int(dim)
    if dim not in (1, 2, 3):
        raise ArgumentError(f"dimension must be 1, 2 or 3, got {dim}")
    counts = [int(counts)] * dim if np.isscalar(counts) else [int(c) for c in counts]
    if len(counts) != dim or min(counts) < 1:
        raise ArgumentError(f"need {dim} positive element counts, got {counts}")
    if box is None:
        box = (0.0, 1.0)
    box = np.asarray(box, dtype=float)
    if box.ndim == 1:
        box = np.tile(box, (dim, 1))
    if box.shape != (dim, 2):
        raise ArgumentError(f"box must be one (lo, hi) pair or {dim} pairs")
    if not np.all(np.isfinite(box)) or np.any(box[:, 1] <= box[:, 0]):
        raise ArgumentError(f"degenerate box {box.tolist()}")
    verts = []
    for (lo, hi), n in zip(box, counts):
        v = np.linspace(lo, hi, n + 1)
        v[0], v[-1] = lo, hi
        verts.append(_frozen(v))
    return CartesianMesh(tuple(verts))


def refine_uniform(mesh: CartesianMesh, times: int = 1) -> CartesianMesh:
    """Bisect every element along every axis, ``times`` times."""
    verts = list(mesh.vertices)
    for _ in range(int(times)):
        new = []
        for v in verts:
            w = np.empty(2 * len(v) - 1)
            w[::2] = v
            w[1::2] = 0.5 * (v[1:] + v[:-1])
            new.append(w)
        verts = new
    return CartesianMesh(tuple(_frozen(v) for v in verts))


def make_lor_mesh(coarse: CartesianMesh, spec: LorSpec) -> CartesianMesh:
    """Split each coarse element at the node-set points mapped into it.

    Coarse vertices are copied exactly so every coarse element boundary is
    a union of fine element boundaries.
    """
    ref = spec.reference_points()
    t = 0.5 * (ref + 1.0)
    verts = []
    for v in coarse.vertices:
        a, b = v[:-1, None], v[1:, None]
        pts = a + (b - a) * t[None, :]
        pts[:, 0], pts[:, -1] = v[:-1], v[1:]
        w = np.concatenate([pts[:, :-1].ravel(), v[-1:]])
        verts.append(_frozen(w))
    _check_vertices(verts)
    return CartesianMesh(tuple(verts), parent=coarse, lor=spec)
