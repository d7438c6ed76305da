"""Finite-difference Poisson solver on masked grids, a discrete critical-point census, and the
thin-neck and dumbbell experiments.

The operator is the 5-point Laplacian over Interior nodes. When a level-set
function for the domain is available, a neighbour outside the domain is
replaced by the interface point at fractional distance ``theta * h`` along
the grid line (symmetric cut-cell treatment), which keeps the matrix SPD and
the solution second-order accurate. Without one, the Boundary node itself
carries the Dirichlet value (staircase).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from .critical import CriticalClass, CriticalPoint
from .errors import BoundViolation, NonConvergence, ResolutionTooCoarse
from .topology import BOUNDARY, EXTERIOR, INTERIOR, Box, GridField, census, make_grid, mask_from_interior

THETA_MIN = 1e-3
DEFAULT_TOL = 1e-10
TIE_ULPS = 64

# neighbour offsets (dy, dx): east, west, north, south
_DIRS = ((0, 1), (0, -1), (1, 0), (-1, 0))


@dataclass
class FDProblem:
    """``Laplace(w) = rhs`` on the Interior cells of ``field.mask`` with Dirichlet data.

    ``boundary_values`` is a full-grid array read at non-Interior cells;
    ``levelset`` (positive inside, same shape) switches on cut-cell boundaries.
    """

    field: GridField
    boundary_values: np.ndarray | None = None
    rhs: float = -2.0
    levelset: np.ndarray | None = None

    def __post_init__(self):
        shape = self.field.shape
        if self.boundary_values is None:
            self.boundary_values = np.zeros(shape)
        self.boundary_values = np.asarray(self.boundary_values, dtype=float)
        if self.boundary_values.shape != shape:
            raise ValueError("boundary_values must match the grid shape")
        if self.levelset is not None:
            self.levelset = np.asarray(self.levelset, dtype=float)
            if self.levelset.shape != shape:
                raise ValueError("levelset must match the grid shape")
        interior = self.field.interior()
        if interior[0].any() or interior[-1].any() or interior[:, 0].any() or interior[:, -1].any():
            raise ValueError("Interior cells may not touch the grid frame")
        rim = self.field.mask == BOUNDARY
        if not np.all(np.isfinite(self.boundary_values[rim])):
            raise ValueError("Boundary cells need finite prescribed values")


def _assemble(prob: FDProblem):
    """Scaled system ``h^2 A``: per-node diagonal and right-hand side (off-diagonals are -1)."""
    inside = prob.field.interior()
    h = prob.field.h
    diag = np.zeros(inside.shape)
    b = np.where(inside, -prob.rhs * h * h, 0.0)
    ls = prob.levelset
    g = prob.boundary_values
    for dy, dx in _DIRS:
        nb_inside = np.roll(inside, (-dy, -dx), axis=(0, 1))
        nb_g = np.roll(g, (-dy, -dx), axis=(0, 1))
        cut = inside & ~nb_inside
        if ls is None:
            theta = np.ones(inside.shape)
        else:
            nb_ls = np.roll(ls, (-dy, -dx), axis=(0, 1))
            with np.errstate(all="ignore"):
                theta = ls / (ls - nb_ls)
            theta = np.where(np.isfinite(theta), theta, THETA_MIN)
            theta = np.clip(theta, THETA_MIN, 1.0)
        diag += np.where(cut, 1.0 / theta, np.where(inside, 1.0, 0.0))
        b += np.where(cut, nb_g / theta, 0.0)
    return np.ascontiguousarray(inside), diag, b


def _matvec_numpy(inside, diag, u):
    y = diag * u
    y[:, :-1] -= u[:, 1:]
    y[:, 1:] -= u[:, :-1]
    y[:-1, :] -= u[1:, :]
    y[1:, :] -= u[:-1, :]
    return np.where(inside, y, 0.0)


def _pcg_numpy(inside, diag, b, tol, max_iter):
    inv = np.where(inside, 1.0 / np.where(inside, diag, 1.0), 0.0)
    u = np.zeros_like(b)
    r = b.copy()
    bnorm = math.sqrt(float(np.sum(b * b)))
    if bnorm == 0.0:
        return u, 0, 0.0
    z = inv * r
    p = z.copy()
    rz = float(np.sum(r * z))
    for it in range(1, max_iter + 1):
        Ap = _matvec_numpy(inside, diag, p)
        alpha = rz / float(np.sum(p * Ap))
        u += alpha * p
        r -= alpha * Ap
        rel = math.sqrt(float(np.sum(r * r))) / bnorm
        if rel <= tol:
            return u, it, rel
        z = inv * r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return u, max_iter, rel


@_accel.njit
def _pcg_kernel(inside, diag, b, tol, max_iter):
    ny, nx = b.shape
    u = np.zeros((ny, nx))
    r = b.copy()
    z = np.zeros((ny, nx))
    p = np.zeros((ny, nx))
    Ap = np.zeros((ny, nx))
    bnorm = 0.0
    for i in range(ny):
        for j in range(nx):
            bnorm += b[i, j] * b[i, j]
    bnorm = math.sqrt(bnorm)
    if bnorm == 0.0:
        return u, 0, 0.0
    rz = 0.0
    for i in range(ny):
        for j in range(nx):
            if inside[i, j]:
                z[i, j] = r[i, j] / diag[i, j]
                p[i, j] = z[i, j]
                rz += r[i, j] * z[i, j]
    rel = 1.0
    for it in range(1, max_iter + 1):
        pAp = 0.0
        for i in range(1, ny - 1):
            for j in range(1, nx - 1):
                if inside[i, j]:
                    v = diag[i, j] * p[i, j] - p[i, j + 1] - p[i, j - 1] - p[i + 1, j] - p[i - 1, j]
                    Ap[i, j] = v
                    pAp += p[i, j] * v
        alpha = rz / pAp
        rr = 0.0
        rz_new = 0.0
        for i in range(1, ny - 1):
            for j in range(1, nx - 1):
                if inside[i, j]:
                    u[i, j] += alpha * p[i, j]
                    r[i, j] -= alpha * Ap[i, j]
                    rr += r[i, j] * r[i, j]
                    z[i, j] = r[i, j] / diag[i, j]
                    rz_new += r[i, j] * z[i, j]
        rel = math.sqrt(rr) / bnorm
        if rel <= tol:
            return u, it, rel
        beta = rz_new / rz
        rz = rz_new
        for i in range(1, ny - 1):
            for j in range(1, nx - 1):
                if inside[i, j]:
                    p[i, j] = z[i, j] + beta * p[i, j]
    return u, max_iter, rel


def solve(prob: FDProblem, tol: float = DEFAULT_TOL, *, max_iter: int | None = None, use_numba=None, info=None) -> GridField:
    """Solve the discrete Dirichlet problem by Jacobi-preconditioned conjugate gradients.

    Returns a :class:`GridField` on the same grid whose values are the
    solution on Interior cells and the Dirichlet data elsewhere. ``info``
    (a dict) receives ``iterations`` and ``relative_residual``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    inside, diag, b = _assemble(prob)
    n = int(inside.sum())
    if n == 0:
        raise ValueError("empty domain")
    if max_iter is None:
        max_iter = 20 * max(inside.shape) + 2000
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        u, it, rel = _pcg_kernel(inside, diag, b, float(tol), int(max_iter))
    else:
        u, it, rel = _pcg_numpy(inside, diag, b, tol, max_iter)
    if info is not None:
        info.update(iterations=int(it), relative_residual=float(rel), unknowns=n)
    if not rel <= tol:
        raise NonConvergence(f"CG stopped at relative residual {rel:.3e} after {it} iterations")
    vals = np.where(inside, u, prob.boundary_values)
    return GridField(prob.field.box, prob.field.h, vals, prob.field.mask.copy())


# ---------------------------------------------------------------------------
# problem builders


def _grid(box, grid_n):
    box, h = make_grid(box, grid_n)
    nx = grid_n
    ny = int(round((box.ymax - box.ymin) / h)) + 1
    x = box.xmin + h * np.arange(nx)
    y = box.ymin + h * np.arange(ny)
    return box, h, x[None, :] + 1j * y[:, None]


def levelset_problem(phi_fn, box, grid_n: int, rhs: float = -2.0, cut_cell: bool = True) -> FDProblem:
    """Problem on ``{phi > 0}`` for a level-set callable ``phi_fn(z)``."""
    box, h, Z = _grid(box, grid_n)
    with np.errstate(all="ignore"):
        ls = np.asarray(phi_fn(Z), dtype=float)
    ls = np.where(np.isnan(ls), -np.inf, ls)
    fld = GridField(box, h, ls.copy(), mask_from_interior(ls > 0))
    return FDProblem(fld, rhs=rhs, levelset=ls if cut_cell else None)


def disk_problem(grid_n: int, radius: float = 1.0, center: complex = 0j, cut_cell: bool = True) -> FDProblem:
    r = radius * 1.1
    box = Box(center.real - r, center.real + r, center.imag - r, center.imag + r)
    return levelset_problem(lambda z: radius - np.abs(z - center), box, grid_n, cut_cell=cut_cell)


def disk_error(grid_n: int, use_numba=None) -> float:
    """Max-norm error of the FD landscape on the unit disk against ``(1 - r^2) / 2``."""
    sol = solve(disk_problem(grid_n), use_numba=use_numba)
    inside = sol.interior()
    exact = 0.5 * (1.0 - np.abs(sol.points) ** 2)
    return float(np.max(np.abs(sol.values - exact)[inside]))


def landscape_problem(p, grid_n: int = 512, box=None, cut_cell: bool = True) -> FDProblem:
    """FD problem on ``{v > 0}`` for anything with a vectorised ``v`` (the level set is v itself)."""
    from .topology import sample_sign_grid

    sampled = sample_sign_grid(p, box, grid_n, check_smoothness=False)
    ls = np.where(sampled.interior(), np.maximum(sampled.values, 1e-300), np.minimum(sampled.values, 0.0))
    fld = GridField(sampled.box, sampled.h, sampled.values.copy(), sampled.mask.copy())
    return FDProblem(fld, levelset=ls if cut_cell else None)


def mask_problem(interior, box, boundary_values=None, rhs: float = -2.0) -> FDProblem:
    """Staircase problem for a bare Boolean mask (e.g. an imported PGM)."""
    fld = GridField.from_mask(interior, box)
    return FDProblem(fld, boundary_values=boundary_values, rhs=rhs)


# ---------------------------------------------------------------------------
# discrete census

# 8-neighbour ring in cyclic order
_RING = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))


def _quadratic_fit(V, iy, ix):
    """Least-squares quadratic on the 3x3 block; returns (gradient, Hessian) in cell units."""
    blk = V[iy - 1 : iy + 2, ix - 1 : ix + 2]
    # closed-form least squares for the symmetric 3x3 stencil
    gx = (blk[:, 2] - blk[:, 0]).sum() / 6.0
    gy = (blk[2, :] - blk[0, :]).sum() / 6.0
    cols = blk.sum(axis=0)
    rows = blk.sum(axis=1)
    hxx = (cols[0] - 2 * cols[1] + cols[2]) / 3.0
    hyy = (rows[0] - 2 * rows[1] + rows[2]) / 3.0
    hxy = (blk[2, 2] - blk[2, 0] - blk[0, 2] + blk[0, 0]) / 4.0
    return np.array([gx, gy]), np.array([[hxx, hxy], [hxy, hyy]])


def _tie_sign(dy, dx):
    """Raster order breaks exact ties: later nodes count as larger."""
    return 1.0 if (dy, dx) > (0, 0) else -1.0


@dataclass
class GridCensus:
    """Discrete critical points of a solved field (locations refined to subpixel)."""

    points: list
    M: int
    S: int
    degenerate: int
    topology: object = None
    candidates: dict = field(default_factory=dict)
    field: GridField | None = field(default=None, repr=False)

    @property
    def N(self):
        return self.M + self.S

    def summary(self):
        return self.topology.summary() if self.topology is not None else [(None, self.M, self.S, None, None)]


def _clusters(cells):
    """Group (iy, ix) cells into 8-connected clusters, deterministic order."""
    cells = sorted(cells)
    seen = set()
    out = []
    pool = set(cells)
    for c in cells:
        if c in seen:
            continue
        stack, grp = [c], []
        seen.add(c)
        while stack:
            y, x = stack.pop()
            grp.append((y, x))
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    nb = (y + dy, x + dx)
                    if nb in pool and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        out.append(sorted(grp))
    return out


def grid_census(fld: GridField, *, with_topology: bool = True, use_numba=None) -> GridCensus:
    """Maxima (above all 8 neighbours) and saddles (>= 4 sign changes around the
    8-neighbour ring, confirmed by a negative quadratic-fit Hessian determinant).

    Ties within a few ulps, common on grids symmetric about a critical point,
    are broken by raster order. Adjacent candidate cells are merged; a
    saddle-candidate cluster without a confirming fit is reported Degenerate
    rather than dropped or counted.
    """
    V = fld.values
    inside = fld.interior()
    ys, xs = np.nonzero(inside[1:-1, 1:-1])
    ys, xs = ys + 1, xs + 1
    c = V[ys, xs]
    nbs = np.stack([V[ys + dy, xs + dx] for dy, dx in _RING])
    ties = np.array([_tie_sign(dy, dx) for dy, dx in _RING])[:, None]
    # differences at rounding level count as ties
    noise = TIE_ULPS * np.finfo(float).eps * float(np.max(np.abs(V[inside])))
    d = nbs - c[None, :]
    diff = np.where(np.abs(d) <= noise, ties, np.sign(d))
    is_max = np.all(diff < 0, axis=0)
    changes = np.sum(diff != np.roll(diff, -1, axis=0), axis=0)
    sad_cand = ~is_max & (changes >= 4)

    pts = []
    for grp in _clusters(list(zip(ys[is_max].tolist(), xs[is_max].tolist()))):
        pts.append(_make_point(fld, grp, CriticalClass.MAXIMUM))
    confirmed = []
    rejected = []
    for iy, ix in zip(ys[sad_cand].tolist(), xs[sad_cand].tolist()):
        _, H = _quadratic_fit(V, iy, ix)
        (confirmed if np.linalg.det(H) < 0 else rejected).append((iy, ix))
    groups = _clusters(confirmed + rejected)
    conf = set(confirmed)
    for grp in groups:
        good = [g for g in grp if g in conf]
        if good:
            pts.append(_make_point(fld, good, CriticalClass.SADDLE))
        else:
            pts.append(_make_point(fld, grp, CriticalClass.DEGENERATE))
    pts.sort(key=lambda p: (p.location.real, p.location.imag))
    M = sum(p.kind is CriticalClass.MAXIMUM for p in pts)
    S = sum(p.kind is CriticalClass.SADDLE for p in pts)
    D = sum(p.kind is CriticalClass.DEGENERATE for p in pts)
    topo = census(fld, pts, use_numba=use_numba) if with_topology else None
    return GridCensus(pts, M, S, D, topo, {"saddle_cells": len(confirmed), "rejected_cells": len(rejected)}, fld)


def _make_point(fld, grp, kind):
    locs, vals = [], []
    for iy, ix in grp:
        g, H = _quadratic_fit(fld.values, iy, ix)
        off = np.zeros(2)
        if abs(np.linalg.det(H)) > 0:
            off = -np.linalg.solve(H, g)
        off = np.clip(off, -1.0, 1.0)
        locs.append(complex(fld.x[ix] + off[0] * fld.h, fld.y[iy] + off[1] * fld.h))
        vals.append(fld.values[iy, ix] + 0.5 * g @ off)
    return CriticalPoint(
        location=complex(np.mean(locs)),
        kind=kind,
        multiplier=math.nan,
        residual=math.nan,
        value=float(np.mean(vals)),
    )


def interpolate(fld: GridField, z) -> float:
    """Bilinear interpolation of the field at ``z``."""
    fx = (z.real - fld.box.xmin) / fld.h
    fy = (z.imag - fld.box.ymin) / fld.h
    ix, iy = int(math.floor(fx)), int(math.floor(fy))
    tx, ty = fx - ix, fy - iy
    V = fld.values
    return float(
        (1 - tx) * (1 - ty) * V[iy, ix] + tx * (1 - ty) * V[iy, ix + 1] + (1 - tx) * ty * V[iy + 1, ix] + tx * ty * V[iy + 1, ix + 1]
    )


# ---------------------------------------------------------------------------
# thin neck


def neck_bound(eps: float, M: float) -> float:
    """Barrier bound ``2M / cosh(pi / (4 eps)) + eps^2`` for the midline of the neck."""
    return 2.0 * M / math.cosh(math.pi / (4.0 * eps)) + eps * eps


@dataclass
class NeckResult:
    eps: float
    M: float
    sup_mid: float
    bound: float
    h: float
    solution: GridField | None = field(default=None, repr=False, compare=False)

    @property
    def holds(self):
        return self.sup_mid <= self.bound


def neck_experiment(eps: float, M: float = 10.0, grid_n: int = 641, *, use_numba=None) -> NeckResult:
    """Solve ``Laplace w = -2`` on ``(-1,1) x (-eps,eps)``, w = 0 on the long sides and M on the short ones.

    ``grid_n`` is the number of nodes across the length 2; the neck must get
    at least 16 cells across its width.
    """
    if not 0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 0.25]")
    if M < 1:
        raise ValueError("M must be >= 1")
    if grid_n % 2 == 0:
        grid_n += 1
    h = 2.0 / (grid_n - 1)
    cells = int(round(2 * eps / h))
    if cells < 16:
        raise ResolutionTooCoarse(f"only {cells} cells across the neck (need 16); raise grid_n")
    h = 2 * eps / cells  # snap so both long sides sit on grid lines
    nx = int(round(2.0 / h)) + 1
    box = Box(-1.0, -1.0 + (nx - 1) * h, -eps, eps)
    interior = np.zeros((cells + 1, nx), dtype=bool)
    interior[1:-1, 1:-1] = True
    g = np.zeros(interior.shape)
    g[:, 0] = M
    g[:, -1] = M
    g[0, :] = 0.0
    g[-1, :] = 0.0
    mask = np.where(interior, INTERIOR, BOUNDARY).astype(np.uint8)
    # pad one exterior ring so no Interior cell touches the frame
    mask = np.pad(mask, 1, constant_values=EXTERIOR)
    g = np.pad(g, 1)
    pbox = Box(box.xmin - h, box.xmin + (nx + 1) * h - h, box.ymin - h, box.ymax + h)
    fld = GridField(pbox, h, np.zeros(mask.shape), mask)
    sol = solve(FDProblem(fld, boundary_values=g), use_numba=use_numba)
    mid = int(np.argmin(np.abs(sol.x)))
    col = sol.values[:, mid][sol.mask[:, mid] != EXTERIOR]
    res = NeckResult(eps, M, float(col.max()), neck_bound(eps, M), h, sol)
    if not res.holds:
        raise BoundViolation(f"neck sup {res.sup_mid:.6g} exceeds bound {res.bound:.6g} at eps={eps}")
    return res


# ---------------------------------------------------------------------------
# dumbbells


def chain_centers(n_disks: int, delta: float):
    step = 2.0 * (1.0 + delta)
    return [complex((k - (n_disks - 1) / 2.0) * step, 0.0) for k in range(n_disks)]


def chain_levelset(n_disks: int, eps: float, delta: float):
    """Max of disk and neck-rectangle signed distances (positive inside)."""
    centers = chain_centers(n_disks, delta)

    def phi(z):
        out = np.full(np.shape(z), -np.inf)
        for c in centers:
            out = np.maximum(out, 1.0 - np.abs(z - c))
        for a, b in zip(centers, centers[1:]):
            dx = np.minimum(z.real - a.real, b.real - z.real)
            dy = eps - np.abs(z.imag)
            out = np.maximum(out, np.where((dx >= 0) & (dy >= 0), np.minimum(dx, dy), -np.hypot(np.minimum(dx, 0), np.minimum(dy, 0))))
        return out

    return phi


def dumbbell_experiment(eps: float = 0.05, delta: float = 0.05, grid_n: int = 768, n_disks: int = 2, *, use_numba=None) -> GridCensus:
    """Unit disks centred ``2(1+delta)`` apart joined by necks of half-width ``eps``; solve and census.

    For a chain of ``n_disks`` at least ``2 n - 1`` critical points are
    asserted.
    """
    if n_disks < 1:
        raise ValueError("need at least one disk")
    centers = chain_centers(n_disks, delta)
    span = max(1.0, eps) + 0.1
    box = Box(centers[0].real - 1.1, centers[-1].real + 1.1, -span, span)
    prob = levelset_problem(chain_levelset(n_disks, eps, delta), box, grid_n)
    if n_disks > 1 and 2 * eps / prob.field.h < 4:
        raise ResolutionTooCoarse(f"neck of half-width {eps} spans fewer than 4 cells; raise grid_n")
    sol = solve(prob, use_numba=use_numba)
    gc = grid_census(sol, use_numba=use_numba)
    need = 2 * n_disks - 1
    if eps < 1.0 and gc.N < need:
        raise BoundViolation(f"chain of {n_disks} disks shows {gc.N} critical points, expected >= {need}")
    return gc


# ---------------------------------------------------------------------------
# PGM masks


def read_pgm(path) -> np.ndarray:
    """Boolean interior mask from a PGM file (P2 text or P5 binary); bright pixels are inside.

    Row 0 of the file is the top of the picture, i.e. the largest y.
    """
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file")
    tokens, pos = [], 2
    while len(tokens) < 3:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    w, h, maxval = tokens
    if magic == b"P2":
        body = [ln.split(b"#")[0] for ln in data[pos:].splitlines()]
        vals = np.array(b" ".join(body).split(), dtype=int)
    else:
        dtype = np.uint8 if maxval < 256 else ">u2"
        vals = np.frombuffer(data[pos + 1 :], dtype=dtype, count=w * h).astype(int)
    if vals.size != w * h:
        raise ValueError(f"{path}: expected {w * h} samples, found {vals.size}")
    return (vals.reshape(h, w) * 2 > maxval)[::-1].copy()


def write_pgm(path, interior) -> None:
    """Plain-text PGM (0 = exterior, 255 = interior)."""
    a = np.asarray(interior, dtype=bool)[::-1]
    lines = ["P2", f"{a.shape[1]} {a.shape[0]}", "255"]
    lines += [" ".join("255" if v else "0" for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n")
