"""Neumann's oval ``(x^2+y^2)^2 = a^2 (x^2+y^2) + 4 x^2`` with its closed-form landscape.

With ``R = (a + sqrt(a^2+4))/2`` and ``D(z) = (R^4-1)^2 + 4 R^4 z^2``::

    v(z)      = Re sqrt(D(z)) / (2 R^2) - |z|^2 / 2
    grad v(z) = conj(2 R^2 z / sqrt(D(z))) - z

(the ``(R^4-1)/(2R^2) + Re(z phi(z))/R`` form simplifies to the first line
because ``z phi(z)`` is entire). The principal square root is continuous on
the oval: D is negative only on the imaginary axis beyond
``|y| = (R^4-1)/(2R^2)``, which is never less than the oval's half-height
``a``.
"""
from __future__ import annotations

import math

import numpy as np

from ._kernels import newton_fixed_point_numpy
from ._numerics import dedup_points
from .critical import DEGENERACY_BAND, CriticalClass, CriticalPoint, classify
from .errors import BadParameters, BranchAmbiguity
from .topology import Box, GridField, make_grid, mask_from_interior

R0 = math.sqrt(1.0 + math.sqrt(2.0))


class NeumannOval:
    def __init__(self, a: float):
        if not a > 0:
            raise BadParameters("a must be positive")
        self.a = float(a)
        self.R = (self.a + math.sqrt(self.a**2 + 4.0)) / 2.0

    @classmethod
    def from_R(cls, R: float) -> "NeumannOval":
        if not R > 1:
            raise BadParameters("R must exceed 1")
        return cls(R - 1.0 / R)

    nodes = np.zeros(0, dtype=complex)

    @property
    def branch_height(self) -> float:
        R4 = self.R**4
        return (R4 - 1.0) / (2.0 * self.R**2)

    def _sqrtD(self, z):
        R4 = self.R**4
        return np.sqrt((R4 - 1.0) ** 2 + 4.0 * R4 * np.asarray(z, dtype=complex) ** 2)

    def v(self, z):
        z = np.asarray(z, dtype=complex)
        return self._sqrtD(z).real / (2.0 * self.R**2) - 0.5 * np.abs(z) ** 2

    def F_dF(self, z):
        """``F(z) = 2R^2 z / sqrt(D)`` (so grad v = conj F - z) and its derivative."""
        z = np.asarray(z, dtype=complex)
        s = self._sqrtD(z)
        R2 = self.R**2
        F = 2.0 * R2 * z / s
        dF = 2.0 * R2 * (self.R**4 - 1.0) ** 2 / s**3
        return F, dF

    def grad(self, z):
        F, _ = self.F_dF(z)
        return np.conj(F) - np.asarray(z)

    def disk_to_oval(self, w):
        """Inverse of the conformal map Omega -> D: ``z = w (R^4-1) / (R (R^2 - w^2))``."""
        w = np.asarray(w, dtype=complex)
        R = self.R
        return w * (R**4 - 1.0) / (R * (R * R - w * w))

    def boundary_points(self, n: int = 256):
        return self.disk_to_oval(np.exp(2j * np.pi * np.arange(n) / n))

    def quartic(self, z):
        z = np.asarray(z, dtype=complex)
        r2 = np.abs(z) ** 2
        return r2**2 - self.a**2 * r2 - 4.0 * z.real**2

    def levelset(self, z):
        """``-quartic / |z|^2``: positive inside, zero on the oval, and ``a^2`` at the origin
        (where the quartic itself has an isolated zero)."""
        z = np.asarray(z, dtype=complex)
        r2 = np.abs(z) ** 2
        with np.errstate(all="ignore"):
            out = self.a**2 - r2 + 4.0 * z.real**2 / r2
        return np.where(r2 > 0, out, self.a**2)

    def bounding_box(self, margin: float = 0.25) -> Box:
        b = self.boundary_points(1024)
        return Box(b.real.min() - margin, b.real.max() + margin, b.imag.min() - margin, b.imag.max() + margin)

    def _check_branch(self, z):
        if abs(z.real) <= 1e-12 and abs(z.imag) >= self.branch_height - 1e-12:
            raise BranchAmbiguity(f"z={z} lies on the branch cut of sqrt(D)")

    def __repr__(self):
        return f"NeumannOval(a={self.a!r}, R={self.R!r})"


def oval_v(o: NeumannOval, z: complex) -> float:
    z = complex(z)
    o._check_branch(z)
    return float(o.v(z))


def oval_grad(o: NeumannOval, z: complex) -> complex:
    z = complex(z)
    o._check_branch(z)
    return complex(o.grad(z))


def t_star(R: float) -> float:
    """Positive real critical point ``sqrt(4R^4 - (R^4-1)^2) / (2R^2)``; nan when R > R0."""
    R4 = R**4
    disc = 4.0 * R4 - (R4 - 1.0) ** 2
    return math.sqrt(disc) / (2.0 * R * R) if disc >= 0 else math.nan


def _point(o, z, band, multiplicity=1, kind=None):
    F, dF = o.F_dF(z)
    mult = float(abs(dF))
    return CriticalPoint(
        location=complex(z),
        kind=kind or classify(mult, band),
        multiplier=mult,
        residual=float(abs(np.conj(F) - z)),
        value=float(o.v(z)),
        multiplicity=multiplicity,
    )


def oval_critical_points(o: NeumannOval, band: float = DEGENERACY_BAND) -> list[CriticalPoint]:
    """Exact critical set: ``{0, +-t*}`` below R0, a triple degenerate zero at R0, ``{0}`` above."""
    if abs(o.R - R0) <= 1e-12:
        return [_point(o, 0j, band, multiplicity=3, kind=CriticalClass.DEGENERATE)]
    t = t_star(o.R)
    if math.isnan(t) or t == 0:
        return [_point(o, 0j, band)]
    return [_point(o, complex(-t), band), _point(o, 0j, band), _point(o, complex(t), band)]


def newton_sweep(o: NeumannOval, grid_n: int = 256, tol: float = 1e-10, band: float = DEGENERACY_BAND):
    """Critical points found by damped Newton seeded on every interior grid node of the oval.

    Converged points closer than ``tol**(1/3)`` are merged: near a triple zero
    the residual cannot tell them apart at this tolerance.
    """
    box = o.bounding_box()
    x = np.linspace(box.xmin, box.xmax, grid_n)
    y = np.linspace(box.ymin, box.ymax, grid_n)
    Zg = (x[None, :] + 1j * y[:, None]).ravel()
    seeds = Zg[o.v(Zg) > 0]
    z, r, _ = newton_fixed_point_numpy(o.F_dF, seeds, max_iter=80)
    ok = (r <= tol) & (o.v(z) > 0)
    z = z[ok]
    keep = dedup_points(z, max(1e-8, tol ** (1.0 / 3.0)))
    pts = [_point(o, complex(zz), band) for zz in z[keep]]
    pts.sort(key=lambda c: (c.location.real, c.location.imag))
    return pts


def sample_field(o: NeumannOval, grid_n: int = 512, margin: float = 0.25) -> GridField:
    """v on a grid over the oval; Interior is decided by :meth:`NeumannOval.levelset`, not by the sign of v."""
    box, h = make_grid(o.bounding_box(margin), grid_n)
    ny = int(round((box.ymax - box.ymin) / h)) + 1
    Z = (box.xmin + h * np.arange(grid_n))[None, :] + 1j * (box.ymin + h * np.arange(ny))[:, None]
    ls = o.levelset(Z)
    inside = ls > 0
    with np.errstate(all="ignore"):
        vals = np.where(inside, o.v(Z), np.minimum(ls, 0.0))
    return GridField(box, h, vals, mask_from_interior(inside))
