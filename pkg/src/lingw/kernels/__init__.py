"""Hot inner loops with a numba path and a pure-numpy fallback.

The backend is chosen by the ``LINGW_BACKEND`` environment variable
(``numba`` by default, ``numpy`` to disable compilation). If numba cannot be
imported the numpy path is used silently. :func:`use_backend` switches at
runtime, which the tests and the benchmark rely on.
"""

import contextlib
import os

from . import _numpy_impl

try:
    from . import _numba_impl
except ImportError:  # pragma: no cover - numba missing
    _numba_impl = None

_IMPLS = {"numpy": _numpy_impl}
if _numba_impl is not None:
    _IMPLS["numba"] = _numba_impl

_backend = os.environ.get("LINGW_BACKEND", "numba").strip().lower()
if _backend not in _IMPLS:
    _backend = "numpy"


def available_backends():
    return tuple(sorted(_IMPLS))


def get_backend():
    return _backend


def set_backend(name):
    global _backend
    name = name.lower()
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    prev = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def _impl():
    return _IMPLS[_backend]


def transport_simplex(C, a, b, max_pivots):
    return _impl().transport_simplex(C, a, b, max_pivots)


def fps_points(points, k, first):
    return _impl().fps_points(points, k, first)


def fps_matrix(D, k, first):
    return _impl().fps_matrix(D, k, first)


def confusion_counts(D, classes, reps, n_classes):
    return _impl().confusion_counts(D, classes, reps, n_classes)


def pairwise_weighted_l2(E, W):
    return _impl().pairwise_weighted_l2(E, W)
