import functools
import math

import numpy as np
import pytest

from orbistrat.models import CATALOG, dumps_model, load_catalog, parse_model
from orbistrat.strata import stratify


@functools.lru_cache(maxsize=None)
def catalog_model(name):
    return load_catalog(name)


@functools.lru_cache(maxsize=None)
def catalog_strata(name):
    return stratify(catalog_model(name))


def p3_spec():
    """Rotations by a third of a turn on the hexagonal lattice; every cone point has order 3."""
    s = math.sqrt(3) / 2
    rot = [[-0.5, -s], [s, -0.5]]
    return dict(
        label="wallpaper_p3",
        dimension=2,
        generators=[
            {"linear": [1, 0, 0, 1], "translation": [1, 0]},
            {"linear": [1, 0, 0, 1], "translation": [-0.5, s]},
            {"linear": [x for r in rot for x in r], "translation": [0, 0]},
        ],
        lattice_basis=[[1, 0], [-0.5, s]],
        fundamental_box={"min": [-0.5, 0], "max": [1, s]},
    )


def mirror_slab_spec():
    """Integer lattice with the reflection in the plane z = 0; mirrors at z = 0 and z = 1/2."""
    return dict(
        label="mirror_slab",
        dimension=3,
        generators=[
            {"linear": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [1, 0, 0]},
            {"linear": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 1, 0]},
            {"linear": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 0, 1]},
            {"linear": [1, 0, 0, 0, 1, 0, 0, 0, -1], "translation": [0, 0, 0]},
        ],
        lattice_basis=[[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        fundamental_box={"min": [0, 0, 0], "max": [1, 1, 1]},
    )


@functools.lru_cache(maxsize=None)
def synthetic_model(name):
    spec = {"wallpaper_p3": p3_spec, "mirror_slab": mirror_slab_spec}[name]()
    return parse_model(dumps_model(spec))


@pytest.fixture(params=CATALOG)
def catalog_name(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, title = mark.args
    if report.when == "setup" and report.passed:
        return
    _, ok, total = _CRITERIA.get(number, (title, True, 0.0))
    _CRITERIA[number] = (title, ok and report.passed, total + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, duration = _CRITERIA[number]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title} ({duration:.1f} s)")
