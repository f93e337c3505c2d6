"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``STATSWITCH_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("STATSWITCH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def swap_particles(state, rows, signs, n_particles, d, i, j, impl=None):
    """Swap particle registers ``i`` and ``j`` (0-based) in rows of ``state``.

    ``state`` is a C-contiguous complex array of shape
    (control rows, d ** n_particles), modified in place.
    """
    impl = impl or _impl
    rows = np.ascontiguousarray(rows, dtype=np.intp)
    signs = np.ascontiguousarray(signs, dtype=float)
    impl.swap_particles(state, rows, signs, int(n_particles), int(d), int(i), int(j))


def hermite_functions(nmax, xi, impl=None):
    impl = impl or _impl
    return np.asarray(impl.hermite_functions(int(nmax), np.ascontiguousarray(xi, dtype=float)))
