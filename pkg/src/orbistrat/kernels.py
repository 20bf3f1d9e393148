"""Backend selection for the batch kernels.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy implementation in ``_pykernels`` takes over. Setting
``ORBISTRAT_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from orbistrat import _pykernels

_impl = _pykernels
BACKEND = "python"

if os.environ.get("ORBISTRAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from orbistrat import _ckernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def _prep(linear, translation, points):
    linear = np.ascontiguousarray(linear, dtype=np.float64)
    translation = np.ascontiguousarray(translation, dtype=np.float64)
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    if linear.ndim != 3 or translation.shape != linear.shape[:2]:
        raise ValueError("expected linear (K, n, n) and translation (K, n)")
    if points.shape[1] != linear.shape[1]:
        raise ValueError("points have the wrong dimension")
    return linear, translation, points


def displacements(linear, translation, points, backend=None) -> np.ndarray:
    """Displacement ``|A_k x_m + b_k - x_m|`` for every isometry k and point m."""
    linear, translation, points = _prep(linear, translation, points)
    impl = _pick(backend)
    if linear.shape[0] == 0:
        return np.zeros((0, points.shape[0]))
    return impl.displacements(linear, translation, points)


def lattice_residuals(linear, translation, basis, points, backend=None):
    """Distance from ``x_m`` to the lattice orbit ``A_k x_m + b_k + L``.

    ``basis`` holds the lattice vectors as columns. Returns ``(residual, shifts)``
    with ``shifts`` the integer lattice coordinates of the closing translation.
    """
    linear, translation, points = _prep(linear, translation, points)
    basis = np.ascontiguousarray(basis, dtype=np.float64)
    basis_inv = np.ascontiguousarray(np.linalg.inv(basis))
    impl = _pick(backend)
    if linear.shape[0] == 0:
        n = points.shape[1]
        return np.zeros((0, points.shape[0])), np.zeros((0, points.shape[0], n), dtype=np.int64)
    return impl.lattice_residuals(linear, translation, basis, basis_inv, points)


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from orbistrat import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")
