"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""

from __future__ import annotations

import numpy as np


def displacements(linear: np.ndarray, translation: np.ndarray, points: np.ndarray) -> np.ndarray:
    moved = np.einsum("kij,mj->kmi", linear, points) + translation[:, None, :]
    return np.linalg.norm(moved - points[None, :, :], axis=2)


def lattice_residuals(
    linear: np.ndarray,
    translation: np.ndarray,
    basis: np.ndarray,
    basis_inv: np.ndarray,
    points: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    disp = np.einsum("kij,mj->kmi", linear, points) + translation[:, None, :] - points[None, :, :]
    coef = np.floor(-np.einsum("ij,kmj->kmi", basis_inv, disp) + 0.5)
    residual = disp + np.einsum("ij,kmj->kmi", basis, coef)
    return np.linalg.norm(residual, axis=2), coef.astype(np.int64)
