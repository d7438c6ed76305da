"""Simply connected quadrature domains given by a polynomial conformal map ``phi: D -> Omega``.

Pulled back to the disk, ``u o phi = P + conj(P)`` where the Dirichlet
polynomial ``P`` has degree ``n - 1``, and the landscape becomes
``vhat(w) = 2 Re P(w) - |phi(w)|^2 / 2``. Its critical points solve::

    2 conj(P'(w)) - phi(w) conj(phi'(w)) = 0,   |w| < 1,

a pair of real polynomial equations of degree ``2n - 1`` each, so there are
at most ``(2n - 1)^2`` of them.
"""
from __future__ import annotations

import warnings

import numpy as np
from skimage.measure import points_in_poly

from ._numerics import dedup_points, fd_hessian
from .critical import DEGENERACY_BAND, CriticalClass, CriticalPoint, classify
from .errors import BadParameters, CapViolation, UnivalenceWarning
from .rational import ComplexPolynomial, poly_roots
from .topology import Box, GridField

NEWTON_TOL = 1e-12
DEDUP_RADIUS = 1e-8


class PolynomialMap:
    """``phi(w) = sum_{j>=1} c_j w^j``, locally univalent on the closed unit disk."""

    def __init__(self, coeffs):
        poly = ComplexPolynomial(coeffs)
        if poly.degree() < 1:
            raise BadParameters("phi must have degree >= 1")
        if abs(poly.coeffs[0]) > 1e-14:
            raise BadParameters("phi must fix the origin (zero constant coefficient)")
        self.poly = ComplexPolynomial(np.concatenate([[0], poly.coeffs[1:]]))
        self.dpoly = self.poly.derivative()
        self.d2poly = self.dpoly.derivative()
        if self.dpoly.degree() >= 1:
            crit = poly_roots(self.dpoly)
            if np.any(np.abs(crit) <= 1 + 1e-12):
                raise BadParameters(f"phi' vanishes in the closed disk at {crit[np.abs(crit) <= 1 + 1e-12]}")
        elif self.dpoly.is_zero():
            raise BadParameters("phi is constant")
        crossings = boundary_self_intersections(self)
        if crossings:
            warnings.warn(
                f"phi is not univalent: boundary curve crosses itself near {crossings[:4]}", UnivalenceWarning
            )

    @property
    def degree(self) -> int:
        return self.poly.degree()

    @property
    def coeffs(self):
        return self.poly.coeffs

    def __call__(self, w):
        return self.poly(np.asarray(w, dtype=complex))

    def boundary(self, n: int = 1024):
        return self(np.exp(2j * np.pi * np.arange(n) / n))

    def __repr__(self):
        return f"PolynomialMap({self.coeffs.tolist()})"


def boundary_self_intersections(phi: PolynomialMap, n: int = 512):
    """Approximate crossing points of the sampled boundary polygon with itself."""
    b = phi.boundary(n)
    p, q = b, np.roll(b, -1)
    d = q - p
    cross = lambda u, v: u.real * v.imag - u.imag * v.real  # noqa: E731
    P, Q = p[:, None], p[None, :]
    Dp, Dq = d[:, None], d[None, :]
    den = cross(Dp, Dq)
    with np.errstate(all="ignore"):
        t = cross(Q - P, Dq) / den
        s = cross(Q - P, Dp) / den
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    adjacent = (gap <= 1) | (gap >= n - 1)
    hit = (den != 0) & (t > 0) & (t < 1) & (s > 0) & (s < 1) & ~adjacent
    i, j = np.nonzero(np.triu(hit))
    return [complex(x) for x in (p[i] + t[i, j] * d[i])]


def dirichlet_polynomial(phi: PolynomialMap) -> ComplexPolynomial:
    """P with ``P + conj(P) = |phi|^2 / 2`` on the unit circle.

    With ``A_m = sum_j c_j conj(c_{j-m})`` the Fourier coefficients of
    ``|phi(e^{it})|^2``, ``P = A_0/4 + (1/2) sum_{m>=1} A_m w^m``.
    """
    c = phi.coeffs
    n = len(c) - 1
    out = np.zeros(n, dtype=complex) if n >= 1 else np.zeros(1, dtype=complex)
    A0 = np.sum(np.abs(c) ** 2)
    out[0] = A0 / 4.0
    for m in range(1, n):
        out[m] = 0.5 * np.sum(c[m:] * np.conj(c[: len(c) - m]))
    return ComplexPolynomial(out)


def vhat(phi: PolynomialMap, w, P: ComplexPolynomial | None = None):
    """Landscape function pulled back to the disk."""
    P = dirichlet_polynomial(phi) if P is None else P
    w = np.asarray(w, dtype=complex)
    return 2.0 * P(w).real - 0.5 * np.abs(phi(w)) ** 2


def critical_system(phi: PolynomialMap, w, P: ComplexPolynomial | None = None):
    """``grad vhat = 2 conj(P'(w)) - phi(w) conj(phi'(w))`` (as ``d/dx + i d/dy``)."""
    P = dirichlet_polynomial(phi) if P is None else P
    w = np.asarray(w, dtype=complex)
    return 2.0 * np.conj(P.derivative()(w)) - phi(w) * np.conj(phi.dpoly(w))


def _newton(phi, P, seeds, max_iter=60, tol=NEWTON_TOL):
    dP, d2P = P.derivative(), P.derivative().derivative()
    w = seeds.copy()

    def parts(w):
        g = 2.0 * np.conj(dP(w)) - phi(w) * np.conj(phi.dpoly(w))
        A = -np.abs(phi.dpoly(w)) ** 2
        B = 2.0 * np.conj(d2P(w)) - phi(w) * np.conj(phi.d2poly(w))
        return g, A, B

    g, A, B = parts(w)
    r = np.abs(g)
    active = r > tol
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        gi, Ai, Bi = g[idx], A[idx], B[idx]
        det = np.abs(Ai) ** 2 - np.abs(Bi) ** 2
        with np.errstate(all="ignore"):
            step = (-np.conj(Ai) * gi + Bi * np.conj(gi)) / det
        step = np.where(np.isfinite(step), step, 0)
        t = np.ones(idx.size)
        done = np.zeros(idx.size, dtype=bool)
        for _ in range(7):
            pend = np.flatnonzero(~done)
            if pend.size == 0:
                break
            wn = w[idx[pend]] + t[pend] * step[pend]
            gn, An, Bn = parts(wn)
            ok = np.abs(gn) < r[idx[pend]]
            sel = idx[pend[ok]]
            w[sel], g[sel], A[sel], B[sel], r[sel] = wn[ok], gn[ok], An[ok], Bn[ok], np.abs(gn[ok])
            done[pend[ok]] = True
            t[pend] *= 0.5
        active[idx[~done]] = False
        active &= r > tol
    return w, r


def _classify_w(phi, P, w, band):
    dP2 = P.derivative().derivative()
    A = abs(phi.dpoly(w)) ** 2
    B = abs(2.0 * np.conj(dP2(w)) - phi(w) * np.conj(phi.d2poly(w)))
    mult = float(B / A)
    if abs(mult - 1.0) <= band:
        return CriticalClass.DEGENERATE, mult
    H = fd_hessian(lambda x: float(vhat(phi, x, P)), w, h=1e-4)
    det = np.linalg.det(H)
    fd_kind = CriticalClass.MAXIMUM if det > 0 and np.trace(H) < 0 else CriticalClass.SADDLE if det < 0 else CriticalClass.DEGENERATE
    if fd_kind is not classify(mult, band):
        return CriticalClass.DEGENERATE, mult
    return fd_kind, mult


def solve_critical_system(
    phi: PolynomialMap, tol: float = NEWTON_TOL, seed_n: int = 256, band: float = DEGENERACY_BAND, diagnostics=None
) -> list[CriticalPoint]:
    """All critical points of v in Omega, found in disk coordinates.

    Damped Newton is started from every node of a ``seed_n x seed_n`` grid
    inside the unit disk. Points are classified by the sign of the
    finite-difference Hessian determinant of ``vhat`` (cross-checked against
    the analytic multiplier) and reported at ``z = phi(w)``.
    """
    diag = diagnostics if diagnostics is not None else {}
    P = dirichlet_polynomial(phi)
    s = np.linspace(-1.0, 1.0, seed_n)
    W = (s[None, :] + 1j * s[:, None]).ravel()
    seeds = W[np.abs(W) < 1.0]
    w, r = _newton(phi, P, seeds, tol=tol)
    ok = (r <= tol) & (np.abs(w) < 1.0)
    diag["seeds"] = int(seeds.size)
    diag["dropped"] = int((~ok).sum())
    w, r = w[ok], r[ok]
    keep = dedup_points(w, DEDUP_RADIUS)
    cap = (2 * phi.degree - 1) ** 2
    if len(keep) > cap:
        raise CapViolation(f"{len(keep)} critical points exceed the cap (2n-1)^2 = {cap}")
    pts = []
    for i in keep:
        kind, mult = _classify_w(phi, P, w[i], band)
        pts.append(
            CriticalPoint(
                location=complex(phi(w[i])),
                kind=kind,
                multiplier=mult,
                residual=float(r[i]),
                value=float(vhat(phi, w[i], P)),
                preimage=complex(w[i]),
            )
        )
    pts.sort(key=lambda c: (c.location.real, c.location.imag))
    return pts


def image_domain_field(phi: PolynomialMap, grid_n: int = 512, margin: float = 0.1) -> GridField:
    """Grid mask of ``phi(D)`` from the sampled boundary polygon (no level-set values)."""
    b = phi.boundary(4096)
    box = Box(b.real.min() - margin, b.real.max() + margin, b.imag.min() - margin, b.imag.max() + margin)
    h = (box.xmax - box.xmin) / (grid_n - 1)
    ny = int(np.ceil((box.ymax - box.ymin) / h)) + 1
    box = Box(box.xmin, box.xmax, box.ymin, box.ymin + (ny - 1) * h)
    x = box.xmin + h * np.arange(grid_n)
    y = box.ymin + h * np.arange(ny)
    X, Y = np.meshgrid(x, y)
    inside = points_in_poly(np.column_stack([X.ravel(), Y.ravel()]), np.column_stack([b.real, b.imag]))
    return GridField.from_mask(inside.reshape(X.shape), box)


def inverse_map(phi: PolynomialMap, z, n_seeds: int = 16, max_iter: int = 60, tol: float = 1e-12):
    """Smallest-modulus solution ``w`` of ``phi(w) = z`` (nan where Newton fails).

    Inside ``phi(D)`` that is the unique preimage in the disk; just outside it
    continues the inverse across the circle.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    ring = np.concatenate([[0.0], 0.5 * np.exp(2j * np.pi * np.arange(n_seeds // 2) / (n_seeds // 2)),
                           np.exp(2j * np.pi * (np.arange(n_seeds - n_seeds // 2 - 1) + 0.5) / (n_seeds - n_seeds // 2 - 1))])
    best = np.full(flat.shape, np.nan + 0j)
    for s0 in ring:
        w = np.full(flat.shape, s0, dtype=complex) if s0 != 0 else flat / phi.coeffs[1]
        with np.errstate(all="ignore"):
            for _ in range(max_iter):
                w = w - (phi(w) - flat) / phi.dpoly(w)
            ok = np.abs(phi(w) - flat) <= tol * np.maximum(1.0, np.abs(flat))
        better = ok & (np.isnan(best) | (np.abs(w) < np.abs(best)))
        best[better] = w[better]
    return best.reshape(z.shape)


def image_domain_problem(phi: PolynomialMap, grid_n: int = 512, margin: float = 0.1, rhs: float = -2.0):
    """Cut-cell FD problem on ``phi(D)`` with level set ``1 - |phi^{-1}(z)|^2``.

    The inverse is only needed next to the boundary; elsewhere the polygon
    mask supplies the sign.
    """
    from scipy import ndimage

    from .pde_grid import FDProblem

    rough = image_domain_field(phi, grid_n, margin)
    inside = rough.interior()
    band = ndimage.binary_dilation(inside ^ ndimage.binary_erosion(inside), iterations=3)
    ls = np.where(inside, 1.0, -1.0)
    w = inverse_map(phi, rough.points[band])
    ls[band] = np.where(np.isnan(w), ls[band], 1.0 - np.abs(w) ** 2)
    fld = GridField.from_mask(ls > 0, rough.box)
    return FDProblem(fld, rhs=rhs, levelset=ls)
