"""Matrix-free tensor-product kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback in ``_reference`` is selected. ``set_backend`` switches at run time
(the benchmark and the backend agreement tests use it).
"""

from ..errors import ArgumentError
from . import _reference

try:  # pragma: no cover - depends on the build
    from . import _ext
except ImportError:  # pragma: no cover
    _ext = None

_BACKENDS = {"python": _reference}
if _ext is not None:
    _BACKENDS["compiled"] = _ext

backend = _BACKENDS.get("compiled", _reference)


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Select "compiled" or "python"; returns the previous backend name."""
    global backend
    if name not in _BACKENDS:
        raise ArgumentError(f"backend {name!r} not available; have {available_backends()}")
    prev = backend.NAME
    backend = _BACKENDS[name]
    return prev


def get_backend():
    return backend.NAME


def get_module(name=None):
    return backend if name is None else _BACKENDS[name]


from .operators import (  # noqa: E402
    Basis1D,
    BlockInverse,
    MassOperator,
    SpaceView,
    apply_mass,
    apply_mass_transpose,
    apply_mixed_mass,
    element_matrices,
    element_matrix,
    mass_diagonal,
)

__all__ = [
    "Basis1D",
    "BlockInverse",
    "MassOperator",
    "SpaceView",
    "apply_mass",
    "apply_mass_transpose",
    "apply_mixed_mass",
    "element_matrices",
    "element_matrix",
    "mass_diagonal",
    "available_backends",
    "set_backend",
    "get_backend",
]
