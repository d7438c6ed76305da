import numpy as np
import pytest

from landscape_lab import _accel

BACKENDS = [pytest.param(True, id="numba"), pytest.param(False, id="numpy")] if _accel.numba is not None else [pytest.param(False, id="numpy")]


@pytest.fixture(params=BACKENDS)
def use_numba(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_interior_points(p, count, rng, grid_n=256):
    """Points of {v > 0} drawn from a coarse grid, jittered, kept away from nodes."""
    from landscape_lab.topology import sample_sign_grid

    fld = sample_sign_grid(p, grid_n=grid_n, check_smoothness=False)
    cand = fld.points[fld.interior()]
    z = rng.choice(cand, size=count) + fld.h * 0.3 * (rng.random(count) - 0.5 + 1j * (rng.random(count) - 0.5))
    far = np.min(np.abs(z[:, None] - np.asarray(p.nodes)[None, :]), axis=1) > 0.05 if len(p.nodes) else np.ones(count, bool)
    z = z[far]
    return z[p.v(z) > 0]


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    number = int(name.split("_")[2])
    if report.failed:
        _CRITERIA[number] = False
    elif report.when == "call":
        _CRITERIA.setdefault(number, True)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if _CRITERIA[number] else 'FAIL'}")
