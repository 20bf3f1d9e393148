import numpy as np
import pytest

from orbistrat import kernels
from orbistrat.strata import singular_dimensions

from conftest import catalog_model

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def random_orthogonal(rng, k, n):
    q, _ = np.linalg.qr(rng.normal(size=(k, n, n)))
    return q


@pytest.mark.parametrize("backend", BACKENDS)
def test_displacements_match_direct_evaluation(backend, rng):
    a = random_orthogonal(rng, 7, 3)
    b = rng.normal(size=(7, 3))
    x = rng.normal(size=(50, 3))
    got = kernels.displacements(a, b, x, backend=backend)
    want = np.array([[np.linalg.norm(a[k] @ p + b[k] - p) for p in x] for k in range(7)])
    assert np.allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_lattice_residuals_close_with_returned_shifts(backend, rng):
    basis = np.array([[1.0, -0.5, 0.0], [0.0, np.sqrt(3) / 2, 0.0], [0.0, 0.0, 1.0]])
    a = random_orthogonal(rng, 4, 3)
    b = rng.normal(size=(4, 3))
    x = rng.uniform(-2, 2, size=(30, 3))
    res, shifts = kernels.lattice_residuals(a, b, basis, x, backend=backend)
    for k in range(4):
        for m in range(30):
            moved = a[k] @ x[m] + b[k] + basis @ shifts[k, m] - x[m]
            assert np.linalg.norm(moved) == pytest.approx(res[k, m], abs=1e-12)


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled extension not built")
    a = random_orthogonal(rng, 12, 2)
    b = rng.normal(size=(12, 2))
    x = rng.normal(size=(200, 2))
    assert np.allclose(kernels.displacements(a, b, x, backend="python"),
                       kernels.displacements(a, b, x, backend="cython"), atol=1e-13)
    r1, s1 = kernels.lattice_residuals(a, b, np.eye(2), x, backend="python")
    r2, s2 = kernels.lattice_residuals(a, b, np.eye(2), x, backend="cython")
    assert np.allclose(r1, r2, atol=1e-13) and np.array_equal(s1, s2)


def test_empty_batch():
    out = kernels.displacements(np.zeros((0, 2, 2)), np.zeros((0, 2)), np.zeros((3, 2)))
    assert out.shape == (0, 3)


def test_shape_errors():
    with pytest.raises(ValueError):
        kernels.displacements(np.eye(2)[None], np.zeros((1, 3)), np.zeros((1, 2)))


@pytest.mark.parametrize("backend", BACKENDS)
def test_batch_singular_dimensions_use_either_backend(backend):
    model = catalog_model("wallpaper_p4")
    pts = np.array([[0.0, 0.0], [0.5, 0.5], [0.5, 0.0], [0.3, 0.1]])
    assert singular_dimensions(model, pts, backend=backend).tolist() == [0, 0, 0, 2]
