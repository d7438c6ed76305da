import numpy as np
import pytest

from landscape_lab.critical import CriticalClass, CriticalPoint
from landscape_lab.errors import UnresolvedTopology
from landscape_lab.rl_domain import RLPotential, critical_points_composition, omega_left, omega_order6, omega_right
from landscape_lab.topology import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    GridField,
    _border_samples,
    auto_box,
    census,
    label,
    sample_sign_grid,
)


class DiskLandscape:
    """v = (1 - |z|^2)/2, the simplest landscape."""

    nodes = np.zeros(0, dtype=complex)

    def v(self, z):
        return (1 - np.abs(z) ** 2) / 2


SHIPPED = {
    "left": (omega_left, 1, 4, 6, 4),
    "right": (omega_right, 1, 4, 3, 1),
    "order6": (omega_order6, 1, 10, 15, 7),
}


def test_auto_box_unit_circle_nodes():
    p = omega_left()
    box = auto_box(p)
    assert box.xmin <= -2.5 and box.xmax >= 2.5 and box.ymin <= -2.5 and box.ymax >= 2.5
    assert np.all(p.v(_border_samples(box, 1024)) < 0)


def test_auto_box_translates_with_node():
    near = auto_box(RLPotential.from_nodes([0.1], [0.5], 1.0))
    far = auto_box(RLPotential.from_nodes([10.1], [0.5], 1.0))
    assert far.xmin - near.xmin == pytest.approx(10.0)
    assert far.xmax - near.xmax == pytest.approx(10.0)
    assert (far.ymin, far.ymax) == pytest.approx((near.ymin, near.ymax))


def test_auto_box_order6_border_negative():
    p = omega_order6()
    box = auto_box(p)
    assert np.all(p.v(_border_samples(box, 1024)) < 0)  # 4096 samples


def test_disk_sampling_radius():
    fld = sample_sign_grid(DiskLandscape(), (-2, 2, -2, 2), 257)
    r = np.abs(fld.points)
    inside = fld.interior()
    assert np.all(r[inside] < 1 + fld.h)
    assert np.all(inside[r < 1 - fld.h])
    assert np.all(fld.mask[inside] == INTERIOR)
    assert set(np.unique(fld.mask)) == {INTERIOR, EXTERIOR, BOUNDARY}


def test_grid_floor():
    with pytest.raises(ValueError):
        sample_sign_grid(DiskLandscape(), (-2, 2, -2, 2), 32)


def test_disk_census():
    fld = sample_sign_grid(DiskLandscape(), (-2, 2, -2, 2), 129)
    top = CriticalPoint(0j, CriticalClass.MAXIMUM, 0.0, 0.0, 0.5)
    c = census(fld, [top])
    assert c.summary() == [(1, 1, 0, 1, True)]


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_census(name):
    make, comps, M, S, k = SHIPPED[name]
    p = make()
    fld = sample_sign_grid(p, grid_n=512)
    c = census(fld, critical_points_composition(p))
    assert c.n_components == comps
    assert c.summary() == [(1, M, S, k, True)]
    # hole accounting: 1 unbounded exterior plus k - 1 holes per component
    assert c.exterior_components == 1 + sum(comp.k - 1 for comp in c.components)


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_resolution_stability(name):
    p = SHIPPED[name][0]()
    pts = critical_points_composition(p)
    a = census(sample_sign_grid(p, grid_n=256), pts)
    b = census(sample_sign_grid(p, grid_n=512), pts)
    assert [(x.M, x.S, x.k) for x in a.components] == [(x.M, x.S, x.k) for x in b.components]
    assert a.assignment == b.assignment


def test_two_components_and_hole():
    n = 96
    y, x = np.mgrid[0:n, 0:n]
    ring = (np.hypot(x - 30, y - 48) < 20) & (np.hypot(x - 30, y - 48) > 8)
    blob = np.hypot(x - 75, y - 48) < 10
    fld = GridField.from_mask(ring | blob, (0, n - 1, 0, n - 1))
    c = census(fld, [])
    assert sorted(comp.k for comp in c.components) == [1, 2]
    assert c.exterior_components == 2


def test_frame_contact_rejected():
    m = np.zeros((70, 70), dtype=bool)
    m[0:10, 10:20] = True
    with pytest.raises(UnresolvedTopology):
        census(GridField.from_mask(m, (0, 69, 0, 69)), [])


def test_hole_touching_two_components_rejected():
    # an island inside a ring: the hole borders both, so ownership is ambiguous
    n = 64
    y, x = np.mgrid[0:n, 0:n]
    r = np.hypot(x - 32, y - 32)
    m = ((r > 12) & (r < 20)) | (r < 5)
    assert label(m, eight=False)[1] == 2
    with pytest.raises(UnresolvedTopology):
        census(GridField.from_mask(m, (0, n - 1, 0, n - 1)), [])


def test_label_backends_agree(use_numba, rng):
    m = rng.random((120, 90)) > 0.55
    for eight in (False, True):
        ref, n_ref = label(m, eight=eight, use_numba=False)
        got, n_got = label(m, eight=eight, use_numba=use_numba)
        assert n_ref == n_got
        # same partition: labels map one-to-one
        pairs = set(zip(ref[m].tolist(), got[m].tolist()))
        assert len(pairs) == n_ref
