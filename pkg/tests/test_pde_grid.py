import math

import numpy as np
import pytest

from landscape_lab import pde_grid
from landscape_lab.errors import NonConvergence, ResolutionTooCoarse
from landscape_lab.pde_grid import (
    FDProblem,
    disk_error,
    disk_problem,
    dumbbell_experiment,
    grid_census,
    interpolate,
    landscape_problem,
    levelset_problem,
    mask_problem,
    neck_bound,
    neck_experiment,
    read_pgm,
    solve,
    write_pgm,
)
from landscape_lab.rl_domain import critical_points_composition, omega_left, omega_right
from landscape_lab.topology import BOUNDARY, INTERIOR, Box, GridField


def square_torsion_center(terms=50):
    """Classical series for Laplace v = -2 on [-1, 1]^2, v = 0 on the sides, at the centre."""
    s = sum((-1) ** k / ((2 * k + 1) ** 3 * math.cosh((2 * k + 1) * math.pi / 2)) for k in range(terms))
    return 1.0 - 32.0 / math.pi**3 * s


# --- solver ----------------------------------------------------------------------


def test_disk_second_order():
    errs = [disk_error(n) for n in (65, 129, 257)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


def test_disk_center_value():
    sol = solve(disk_problem(129))
    assert interpolate(sol, 0j) == pytest.approx(0.5, abs=1e-4)


def test_staircase_is_first_order_only():
    errs = []
    for n in (65, 129):
        sol = solve(disk_problem(n, cut_cell=False))
        ins = sol.interior()
        errs.append(float(np.max(np.abs(sol.values - 0.5 * (1 - np.abs(sol.points) ** 2))[ins])))
    assert errs[0] / errs[1] < 3.0


def square_levelset(z):
    return np.minimum(1 - np.abs(z.real), 1 - np.abs(z.imag))


def test_square_center_matches_series():
    exact = square_torsion_center()
    errs = [abs(interpolate(solve(levelset_problem(square_levelset, Box(-1.1, 1.1, -1.1, 1.1), n)), 0j) - exact) for n in (111, 221)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert errs[1] < 1e-4


def test_square_classical_torsion_constant():
    # with Laplace u = -1 the centre value is the textbook 0.2947, half of the rhs -2 value
    assert square_torsion_center() / 2 == pytest.approx(0.2947, abs=1e-4)
    sol = solve(levelset_problem(square_levelset, Box(-1.1, 1.1, -1.1, 1.1), 221, rhs=-1.0))
    assert interpolate(sol, 0j) == pytest.approx(0.2947, abs=1e-4)


@pytest.mark.parametrize("make", [omega_left, omega_right])
def test_rl_domain_matches_closed_form(make):
    p = make()
    errs = []
    for n in (256, 512):
        sol = solve(landscape_problem(p, n))
        ins = sol.interior()
        errs.append(float(np.max(np.abs(sol.values[ins] - p.v(sol.points[ins])))) / sol.h**2)
    # uniform O(h^2): the scaled error stays put under refinement
    assert errs[1] < 1.2 * errs[0] and errs[1] < 1.0


def test_backends_agree(use_numba):
    prob = landscape_problem(omega_right(), 200)
    ref = solve(prob, use_numba=False)
    got = solve(prob, use_numba=use_numba)
    np.testing.assert_allclose(got.values, ref.values, atol=1e-9)


def test_deterministic():
    prob = disk_problem(97)
    a, b = solve(prob), solve(prob)
    assert np.array_equal(a.values, b.values)


def test_info_and_nonconvergence():
    info = {}
    solve(disk_problem(65), info=info)
    assert info["relative_residual"] <= 1e-10 and info["iterations"] > 0
    with pytest.raises(NonConvergence):
        solve(disk_problem(65), max_iter=3)


def test_maximum_principle(rng):
    # nonnegative boundary data and rhs = -2 give a strictly positive solution
    prob = landscape_problem(omega_left(), 160)
    g = np.where(prob.field.mask == BOUNDARY, rng.random(prob.field.shape), 0.0)
    sol = solve(FDProblem(prob.field, boundary_values=g))
    assert np.all(sol.values[sol.interior()] > 0)


def test_problem_validation():
    m = np.zeros((10, 10), dtype=bool)
    m[0, 3] = True
    with pytest.raises(ValueError):
        mask_problem(m, Box(0, 9, 0, 9))
    m = np.zeros((10, 10), dtype=bool)
    m[3:6, 3:6] = True
    with pytest.raises(ValueError):
        mask_problem(m, Box(0, 9, 0, 9), boundary_values=np.full((10, 10), np.nan))
    with pytest.raises(ValueError):
        solve(mask_problem(m, Box(0, 9, 0, 9)), tol=0)


# --- census ----------------------------------------------------------------------


def test_disk_census():
    gc = grid_census(solve(disk_problem(129)))
    assert (gc.M, gc.S, gc.degenerate) == (1, 0, 0)
    assert abs(gc.points[0].location) < 1e-3
    assert gc.topology.summary() == [(1, 1, 0, 1, True)]


@pytest.mark.parametrize("make,counts", [(omega_left, (4, 6)), (omega_right, (4, 3))])
def test_rl_census_matches_analytic(make, counts):
    p = make()
    sol = solve(landscape_problem(p, 512))
    gc = grid_census(sol)
    assert (gc.M, gc.S, gc.degenerate) == (*counts, 0)
    for c in critical_points_composition(p):
        match = min(gc.points, key=lambda q: abs(q.location - c.location))
        assert abs(match.location - c.location) < 2 * sol.h
        assert match.kind is c.kind


def test_plateau_ties_do_not_invent_points():
    # a symmetric grid about the centre has exact ties between mirror nodes
    for n in (128, 129):
        gc = grid_census(solve(disk_problem(n)))
        assert (gc.M, gc.S, gc.degenerate) == (1, 0, 0)


# --- neck ------------------------------------------------------------------------


def test_neck_bound_value():
    assert neck_bound(0.1, 10) == pytest.approx(0.02553, abs=1e-5)
    assert neck_bound(0.1, 10) == pytest.approx(2 * 10 / math.cosh(math.pi / 0.4) + 0.01, rel=1e-15)


def test_neck_sequence_decreasing():
    sups = []
    for eps in (0.2, 0.1, 0.05):
        r = neck_experiment(eps, 10)
        assert r.holds and r.sup_mid <= r.bound
        sups.append(r.sup_mid)
    assert sups[0] > sups[1] > sups[2] > 0


def test_neck_midline_approaches_parabola():
    # far from the ends the neck solution is eps^2 - y^2
    r = neck_experiment(0.05, 10)
    assert r.sup_mid == pytest.approx(0.05**2, rel=1e-3)


def test_neck_parameter_checks():
    with pytest.raises(ValueError):
        neck_experiment(0.3)
    with pytest.raises(ValueError):
        neck_experiment(0.1, M=0.5)
    with pytest.raises(ResolutionTooCoarse):
        neck_experiment(0.05, grid_n=101)


# --- dumbbells ---------------------------------------------------------------------


def test_dumbbell_two_maxima_one_saddle():
    gc = dumbbell_experiment(0.05, 0.05, grid_n=512)
    assert (gc.M, gc.S, gc.degenerate) == (2, 1, 0)
    saddle = [p for p in gc.points if p.is_saddle][0]
    assert abs(saddle.location) < 0.05


@pytest.mark.slow
def test_three_disk_chain():
    gc = dumbbell_experiment(0.05, 0.05, grid_n=1024, n_disks=3)
    assert gc.N >= 5
    assert (gc.M, gc.S) == (3, 2)


def test_fat_neck_single_maximum():
    gc = dumbbell_experiment(1.0, 0.05, grid_n=384)
    assert (gc.M, gc.S, gc.degenerate) == (1, 0, 0)


def test_unresolved_neck_rejected():
    with pytest.raises(ResolutionTooCoarse):
        dumbbell_experiment(0.01, 0.05, grid_n=256)


# --- PGM ---------------------------------------------------------------------------


def test_pgm_round_trip(tmp_path):
    m = np.zeros((20, 30), dtype=bool)
    m[5:12, 4:25] = True
    m[3, 7] = True
    write_pgm(tmp_path / "m.pgm", m)
    assert np.array_equal(read_pgm(tmp_path / "m.pgm"), m)


def test_pgm_binary_orientation(tmp_path):
    raw = np.array([[255, 0], [0, 0]], dtype=np.uint8)  # top-left bright
    (tmp_path / "b.pgm").write_bytes(b"P5\n# note\n2 2\n255\n" + raw.tobytes())
    got = read_pgm(tmp_path / "b.pgm")
    assert got[1, 0] and got.sum() == 1  # row 0 of the array is the bottom


def test_pgm_rejects_other_formats(tmp_path):
    (tmp_path / "x.pgm").write_text("P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "x.pgm")


def test_mask_problem_square_from_pgm(tmp_path):
    n = 101
    m = np.zeros((n, n), dtype=bool)
    m[1:-1, 1:-1] = True
    write_pgm(tmp_path / "sq.pgm", m)
    prob = mask_problem(read_pgm(tmp_path / "sq.pgm"), Box(-1, 1, -1, 1))
    sol = solve(prob)
    # the staircase is exact for a grid-aligned square
    assert interpolate(sol, 0j) == pytest.approx(square_torsion_center(), abs=2e-4)
