"""Topology of ``Omega = {v > 0}`` on a sampled grid, and the per-component Morse census.

Interior cells are flood-filled with 4-connectivity and exterior cells with
8-connectivity, the usual Jordan-consistent pairing: a diagonal gap can
never leak through both phases. The exterior component touching the frame
is the unbounded one; every other exterior component is a hole and belongs
to the single interior component around it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from . import _accel
from .critical import CriticalClass
from .errors import NonSmoothBoundary, UnresolvedTopology

EXTERIOR = 0
INTERIOR = 1
BOUNDARY = 2


class Box(NamedTuple):
    xmin: float
    xmax: float
    ymin: float
    ymax: float


@dataclass
class GridField:
    """Field sampled on a uniform node grid; ``values[iy, ix]`` sits at ``(x[ix], y[iy])``."""

    box: Box
    h: float
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.box = Box(*self.box)
        ny, nx = self.values.shape
        if self.mask.shape != self.values.shape:
            raise ValueError("mask and values differ in shape")
        if abs(self.box.xmin + (nx - 1) * self.h - self.box.xmax) > 1e-9 * max(1.0, abs(self.box.xmax)):
            raise ValueError("x extent inconsistent with h")
        if abs(self.box.ymin + (ny - 1) * self.h - self.box.ymax) > 1e-9 * max(1.0, abs(self.box.ymax)):
            raise ValueError("y extent inconsistent with h")

    @property
    def shape(self):
        return self.values.shape

    @property
    def x(self):
        return self.box.xmin + self.h * np.arange(self.values.shape[1])

    @property
    def y(self):
        return self.box.ymin + self.h * np.arange(self.values.shape[0])

    @property
    def points(self):
        return self.x[None, :] + 1j * self.y[:, None]

    def index_of(self, z):
        ix = int(round((z.real - self.box.xmin) / self.h))
        iy = int(round((z.imag - self.box.ymin) / self.h))
        return iy, ix

    def interior(self):
        return self.mask == INTERIOR

    @classmethod
    def from_mask(cls, interior, box, values=None):
        """Build a field from a boolean interior mask, marking the rim as Boundary."""
        interior = np.asarray(interior, dtype=bool)
        ny, nx = interior.shape
        box = Box(*box)
        h = (box.xmax - box.xmin) / (nx - 1)
        box = Box(box.xmin, box.xmax, box.ymin, box.ymin + (ny - 1) * h)
        if values is None:
            values = np.where(interior, 1.0, -1.0)
        return cls(box, h, np.asarray(values, dtype=float), mask_from_interior(interior))


def mask_from_interior(interior):
    """Exterior cells 4-adjacent to an interior cell become Boundary."""
    interior = np.asarray(interior, dtype=bool)
    mask = np.where(interior, INTERIOR, EXTERIOR).astype(np.uint8)
    near = np.zeros_like(interior)
    near[1:, :] |= interior[:-1, :]
    near[:-1, :] |= interior[1:, :]
    near[:, 1:] |= interior[:, :-1]
    near[:, :-1] |= interior[:, 1:]
    mask[near & ~interior] = BOUNDARY
    return mask


def make_grid(box, grid_n):
    """Uniform grid with ``grid_n`` nodes across x and the same spacing in y."""
    box = Box(*box)
    h = (box.xmax - box.xmin) / (grid_n - 1)
    ny = int(round((box.ymax - box.ymin) / h)) + 1
    box = Box(box.xmin, box.xmax, box.ymin, box.ymin + (ny - 1) * h)
    return box, h


# ---------------------------------------------------------------------------
# box and sampling


def _border_samples(box, per_side=1024):
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    x0, x1, y0, y1 = box
    bottom = x0 + (x1 - x0) * t + 1j * y0
    right = x1 + 1j * (y0 + (y1 - y0) * t)
    top = x1 - (x1 - x0) * t + 1j * y1
    left = x0 + 1j * (y1 - (y1 - y0) * t)
    return np.concatenate([bottom, right, top, left])


def auto_box(p, per_side: int = 1024) -> Box:
    """Square box with ``v < 0`` along its whole frame.

    Starts from the bounding box of the nodes inflated by 2 and doubles the
    half-width about the centre until all ``4 * per_side`` frame samples are
    negative; since ``v -> -inf`` this terminates.
    """
    nodes = np.asarray(getattr(p, "nodes", np.zeros(0)), dtype=complex)
    if nodes.size:
        x0, x1 = nodes.real.min() - 2, nodes.real.max() + 2
        y0, y1 = nodes.imag.min() - 2, nodes.imag.max() + 2
    else:
        x0, x1, y0, y1 = -2.0, 2.0, -2.0, 2.0
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    half = max(x1 - x0, y1 - y0) / 2
    for _ in range(60):
        box = Box(cx - half, cx + half, cy - half, cy + half)
        with np.errstate(all="ignore"):
            vb = p.v(_border_samples(box, per_side))
        if np.all(vb < 0):
            return box
        half *= 2
    raise RuntimeError("auto_box failed to enclose the domain")


def sample_sign_grid(p, box=None, grid_n: int = 512, *, check_smoothness: bool = True) -> GridField:
    """Sample ``v`` on a grid and classify nodes by sign (Interior iff v > 0).

    Nodes nearest to a positive-weight log node are forced Exterior: v is
    ``-inf`` there, even when the hole around it is far thinner than the grid.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be >= 64")
    box = auto_box(p) if box is None else Box(*box)
    box, h = make_grid(box, grid_n)
    ny = int(round((box.ymax - box.ymin) / h)) + 1
    x = box.xmin + h * np.arange(grid_n)
    y = box.ymin + h * np.arange(ny)
    Zg = x[None, :] + 1j * y[:, None]
    with np.errstate(all="ignore"):
        vals = p.v(Zg)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    interior = vals > 0
    for a in np.asarray(getattr(p, "sink_nodes", np.zeros(0)), dtype=complex):
        ix = int(round((a.real - box.xmin) / h))
        iy = int(round((a.imag - box.ymin) / h))
        if 0 <= ix < grid_n and 0 <= iy < ny:
            interior[iy, ix] = False
    field_ = GridField(box, h, vals, mask_from_interior(interior))
    if check_smoothness and hasattr(p, "grad"):
        _check_boundary_gradient(p, field_)
    return field_


def _check_boundary_gradient(p, field_):
    interior = field_.interior()
    ext = ~interior
    rim = np.zeros_like(interior)
    rim[1:, :] |= ext[:-1, :]
    rim[:-1, :] |= ext[1:, :]
    rim[:, 1:] |= ext[:, :-1]
    rim[:, :-1] |= ext[:, 1:]
    rim &= interior
    if not rim.any():
        return
    with np.errstate(all="ignore"):
        g = np.abs(p.grad(field_.points[rim]))
    g = g[np.isfinite(g)]
    if g.size and g.min() < field_.h:
        warnings.warn(
            f"|grad v| = {g.min():.2e} on a boundary cell (h = {field_.h:.2e}); boundary may be singular",
            NonSmoothBoundary,
        )


# ---------------------------------------------------------------------------
# connected-component labelling


def _label_kernel(mask, eight):
    ny, nx = mask.shape
    labels = np.zeros((ny, nx), dtype=np.int32)
    stack = np.empty(ny * nx, dtype=np.int64)
    count = 0
    for start in range(ny * nx):
        sy, sx = start // nx, start % nx
        if not mask[sy, sx] or labels[sy, sx] != 0:
            continue
        count += 1
        labels[sy, sx] = count
        top = 0
        stack[top] = start
        top += 1
        while top > 0:
            top -= 1
            cur = stack[top]
            cy, cx = cur // nx, cur % nx
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    if dy == 0 and dx == 0:
                        continue
                    if not eight and dy != 0 and dx != 0:
                        continue
                    yy, xx = cy + dy, cx + dx
                    if 0 <= yy < ny and 0 <= xx < nx and mask[yy, xx] and labels[yy, xx] == 0:
                        labels[yy, xx] = count
                        stack[top] = yy * nx + xx
                        top += 1
    return labels, count


_label_numba = _accel.njit(_label_kernel) if _accel.numba is not None else _label_kernel


def label(mask, eight: bool, use_numba=None):
    """Connected components of a boolean mask, numbered in raster order of first cell."""
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        labels, count = _label_numba(mask, eight)
        return labels, int(count)
    structure = np.ones((3, 3), dtype=bool) if eight else ndimage.generate_binary_structure(2, 1)
    labels, count = ndimage.label(mask, structure=structure)
    return labels.astype(np.int32), int(count)


# ---------------------------------------------------------------------------
# census


@dataclass
class ComponentCensus:
    component_id: int
    M: int
    S: int
    k: int
    morse_ok: bool
    degenerate: int = 0
    cells: int = 0


@dataclass
class TopologyCensus:
    components: list
    global_M: int
    global_S: int
    global_k_sum: int
    global_degenerate: int = 0
    exterior_components: int = 1
    assignment: list = field(default_factory=list)

    @property
    def n_components(self):
        return len(self.components)

    def summary(self):
        return [(c.component_id, c.M, c.S, c.k, c.morse_ok) for c in self.components]


def _hole_owners(int_labels, ext_labels):
    pairs = set()
    ny, nx = int_labels.shape
    for sl_a, sl_b in (
        ((slice(1, None), slice(None)), (slice(None, -1), slice(None))),
        ((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
        ((slice(None), slice(1, None)), (slice(None), slice(None, -1))),
        ((slice(None), slice(None, -1)), (slice(None), slice(1, None))),
    ):
        e = ext_labels[sl_a]
        i = int_labels[sl_b]
        sel = (e > 0) & (i > 0)
        if sel.any():
            pairs.update(zip(e[sel].tolist(), i[sel].tolist()))
    owners = {}
    for e, i in pairs:
        owners.setdefault(e, set()).add(i)
    return owners


def _cell_for_point(field_, int_labels, z):
    iy, ix = field_.index_of(z)
    ny, nx = int_labels.shape
    best = None
    for dy in (0, -1, 1):
        for dx in (0, -1, 1):
            yy, xx = iy + dy, ix + dx
            if 0 <= yy < ny and 0 <= xx < nx and int_labels[yy, xx] > 0:
                d = abs(field_.box.xmin + xx * field_.h + 1j * (field_.box.ymin + yy * field_.h) - z)
                if best is None or d < best[0]:
                    best = (d, int_labels[yy, xx])
    if best is None:
        raise ValueError(f"critical point {z} does not lie in an Interior cell")
    return int(best[1])


def census(field_: GridField, points, use_numba=None) -> TopologyCensus:
    """Components of Omega, their connectivity ``k``, and the Morse check ``S - M = k - 2``.

    Raises :class:`UnresolvedTopology` when a hole touches two interior
    components (the grid is too coarse to tell them apart) or when Omega
    reaches the frame of the box.
    """
    interior = field_.interior()
    int_labels, n_int = label(interior, eight=False, use_numba=use_numba)
    ext_labels, n_ext = label(~interior, eight=True, use_numba=use_numba)
    frame = np.concatenate([int_labels[0], int_labels[-1], int_labels[:, 0], int_labels[:, -1]])
    if (frame > 0).any():
        raise UnresolvedTopology("Omega touches the box frame; enlarge the box")
    frame_ext = set(np.concatenate([ext_labels[0], ext_labels[-1], ext_labels[:, 0], ext_labels[:, -1]]).tolist())
    frame_ext.discard(0)
    owners = _hole_owners(int_labels, ext_labels)
    holes = {c: 0 for c in range(1, n_int + 1)}
    for e in range(1, n_ext + 1):
        if e in frame_ext:
            continue
        own = owners.get(e, set())
        if len(own) != 1:
            raise UnresolvedTopology(f"hole {e} touches {len(own)} interior components; refine the grid")
        holes[next(iter(own))] += 1

    M = {c: 0 for c in holes}
    S = {c: 0 for c in holes}
    D = {c: 0 for c in holes}
    assignment = []
    for pt in points:
        c = _cell_for_point(field_, int_labels, pt.location)
        assignment.append(c)
        if pt.kind is CriticalClass.MAXIMUM:
            M[c] += pt.multiplicity
        elif pt.kind is CriticalClass.SADDLE:
            S[c] += pt.multiplicity
        else:
            D[c] += pt.multiplicity
    cells = np.bincount(int_labels.ravel(), minlength=n_int + 1)
    comps = []
    for c in range(1, n_int + 1):
        k = 1 + holes[c]
        comps.append(ComponentCensus(c, M[c], S[c], k, S[c] - M[c] == k - 2, D[c], int(cells[c])))
    return TopologyCensus(
        components=comps,
        global_M=sum(M.values()),
        global_S=sum(S.values()),
        global_k_sum=sum(c.k for c in comps),
        global_degenerate=sum(D.values()),
        exterior_components=n_ext,
        assignment=assignment,
    )
