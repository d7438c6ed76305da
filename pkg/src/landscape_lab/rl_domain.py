"""RL-domains: landscape functions ``v = Re f - |z|^2/2 + T`` with ``f'`` rational.

Critical points of v solve ``conj(F(z)) = z`` with ``F = f'``. Two
independent solvers are provided:

* :func:`critical_points_composition` -- every fixed point of the
  anti-holomorphic map is a fixed point of the rational map ``F* o F``, so
  all candidates are roots of one polynomial; period-2 orbits are filtered
  out by the direct residual.
* :func:`critical_points_newton` -- damped Newton on the real 2x2 system,
  seeded at grid-local minima of ``|conj(F) - z|``.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from types import SimpleNamespace

import numpy as np

from . import _kernels
from ._numerics import dedup_points, local_minima
from .critical import DEGENERACY_BAND, CriticalClass, CriticalPoint, classify, count_kinds
from .errors import (
    AnnulusDegenerate,
    BadParameters,
    BoundViolation,
    DegenerateCriticals,
    PoleProximity,
    SearchExhausted,
)
from .rational import POLE_GUARD, Z, ComplexPolynomial, RationalFn, conj_coeffs, poly_roots, rat_compose

INTERIOR_MARGIN = 1e-12
DEDUP_RADIUS = 1e-8
DEFAULT_TOL = 1e-9


class RLPotential:
    """Landscape function of an RL-domain.

    Parameters
    ----------
    fprime : RationalFn
        ``F = f'``. Simple-pole coefficients (the residues) must be real,
        otherwise ``Re f`` is multivalued.
    level_T : float
        Additive constant; ``Omega = {v > 0}``.
    """

    def __init__(self, fprime: RationalFn, level_T: float):
        for node, coeffs in fprime.poles:
            c1 = coeffs[0]
            if abs(c1.imag) > 1e-12 * max(1.0, abs(c1)):
                raise BadParameters(f"residue {c1} at {node} is not real; Re f would be multivalued")
        poly = fprime.poly_part
        if poly.degree() > 1 or (poly.degree() == 1 and abs(poly.coeffs[1]) >= 1):
            raise BadParameters("polynomial part of f' must be at most linear with |slope| < 1 so that v -> -inf")
        self.fprime = fprime
        self.level_T = float(level_T)

    @classmethod
    def from_nodes(cls, nodes, weights, level_T, poly_part=None):
        nodes = list(np.atleast_1d(np.asarray(nodes, dtype=complex)))
        weights = list(np.atleast_1d(np.asarray(weights)))
        if len(nodes) != len(weights):
            raise BadParameters("nodes and weights differ in length")
        return cls(RationalFn.simple_poles(nodes, weights, poly_part), level_T)

    @property
    def degree(self) -> int:
        return self.fprime.degree()

    @cached_property
    def packed(self):
        f = self.fprime
        mmax = max(f.max_order(), 1)
        coefs = np.zeros((len(f.poles), mmax), dtype=complex)
        orders = np.zeros(len(f.poles), dtype=np.int64)
        for j, (_, c) in enumerate(f.poles):
            coefs[j, : len(c)] = c
            orders[j] = len(c)
        poly = np.ascontiguousarray(f.poly_part.coeffs, dtype=complex)
        polyint = np.ascontiguousarray(f.poly_part.antiderivative().coeffs, dtype=complex)
        return SimpleNamespace(
            poly=poly, polyint=polyint, nodes=np.ascontiguousarray(f.nodes), coefs=coefs, orders=orders, T=self.level_T
        )

    @property
    def nodes(self) -> np.ndarray:
        return self.fprime.nodes

    @property
    def sink_nodes(self) -> np.ndarray:
        """Log nodes with positive weight: ``v -> -inf`` there, so they always sit outside Omega."""
        return np.array([p.node for p in self.fprime.poles if len(p.coeffs) == 1 and p.coeffs[0].real > 0], dtype=complex)

    def with_level(self, level_T: float) -> "RLPotential":
        return RLPotential(self.fprime, level_T)

    def v(self, z):
        z = np.asarray(z, dtype=complex)
        return _kernels.v_many(z, self.packed).reshape(z.shape)

    def F_dF(self, z):
        z = np.asarray(z, dtype=complex)
        F, dF = _kernels.F_dF_many(z, self.packed)
        return F.reshape(z.shape), dF.reshape(z.shape)

    def grad(self, z):
        F, _ = self.F_dF(z)
        return np.conj(F) - np.asarray(z)

    def _guard(self, z):
        for a in self.nodes:
            if abs(z - a) <= POLE_GUARD:
                raise PoleProximity(f"z={z} within {POLE_GUARD} of node {a}")

    def __repr__(self):
        return f"RLPotential(n={self.degree}, T={self.level_T}, fprime={self.fprime!r})"


def eval_v(p: RLPotential, z: complex) -> float:
    z = complex(z)
    p._guard(z)
    return float(p.v(np.array([z]))[0])


def eval_grad(p: RLPotential, z: complex) -> complex:
    """``v_x + i v_y = conj(F(z)) - z``."""
    z = complex(z)
    p._guard(z)
    return complex(p.grad(np.array([z]))[0])


# ---------------------------------------------------------------------------
# named examples


def _roots_of_unity(m):
    return np.exp(2j * np.pi * np.arange(m) / m)


def omega_left() -> RLPotential:
    """Order 3, four boundary curves: weights 3/4 at the cube roots of unity, T = 1/2."""
    return RLPotential.from_nodes(_roots_of_unity(3), [0.75] * 3, 0.5)


def omega_right() -> RLPotential:
    """Same generator as :func:`omega_left` at the lower level T = 2/5 (simply connected)."""
    return RLPotential.from_nodes(_roots_of_unity(3), [0.75] * 3, 0.4)


def omega_order6() -> RLPotential:
    """Order 6, seven boundary curves: 1/3 at the fifth roots of unity plus 9/40 at 0, T = 1/2."""
    return RLPotential.from_nodes(list(_roots_of_unity(5)) + [0], [1 / 3] * 5 + [9 / 40], 0.5)


# ---------------------------------------------------------------------------
# solvers


def _check_finite_critical_set(p: RLPotential):
    f = p.fprime
    if p.degree < 1:
        raise BadParameters("f' must have degree >= 1")
    if p.degree == 1 and len(f.poles) == 1 and len(f.poles[0].coeffs) == 1:
        node, (c,) = f.poles[0]
        b = f.poly_part.coeffs[0] if f.poly_part.degree() == 0 else 0j
        # f' = conj(z0) + r^2/(z - z0) is the Schwarz function of a circle
        if c.real > 0 and abs(b - np.conj(node)) <= 1e-12 * max(1.0, abs(node)):
            raise AnnulusDegenerate(
                f"f' = {b} + {c.real}/(z - {node}) is the Schwarz function of a circle; the critical set is a circle"
            )


def _make_points(p: RLPotential, z, res, band):
    _, dF = p.F_dF(z)
    vals = p.v(z)
    pts = []
    for zi, ri, di, vi in zip(z, res, dF, vals):
        mult = float(abs(di))
        pts.append(CriticalPoint(complex(zi), classify(mult, band), mult, float(ri), float(vi)))
    return pts


def _finalize(p, z, res, tol, band, diagnostics, require_inside=True):
    keep = dedup_points(z, DEDUP_RADIUS)
    z, res = z[keep], res[keep]
    vals = p.v(z) if z.size else np.zeros(0)
    if require_inside:
        near = np.abs(vals) <= INTERIOR_MARGIN
        diagnostics["boundary_suspicious"] = [complex(x) for x in z[near]]
        inside = vals > INTERIOR_MARGIN
        diagnostics["outside"] = int((~inside & ~near).sum())
        z, res = z[inside], res[inside]
    pts = _make_points(p, z, res, band)
    pts.sort(key=lambda c: (c.location.real, c.location.imag))
    return pts


def composed_polynomial(p: RLPotential) -> ComplexPolynomial:
    """Numerator of ``G(z) - z`` with ``G = F* o F``; every critical point is a root."""
    Fq = p.fprime.as_quotient()
    G = rat_compose(conj_coeffs(Fq), Fq)
    return (G.num - Z * G.den).trimmed(1e-14)


def critical_points_composition(
    p: RLPotential,
    tol: float = DEFAULT_TOL,
    *,
    seed: int = 0,
    band: float = DEGENERACY_BAND,
    require_inside: bool = True,
    diagnostics: dict | None = None,
) -> list[CriticalPoint]:
    """Critical points of v from the roots of the composed polynomial.

    Each root is polished by a few Newton steps on ``conj(F) - z``; the
    polished point is kept only if it stays within ``1e-6`` of the root
    (so Newton cannot jump to a different fixed point) and its residual is
    at most ``tol``. Roots failing this are period-2 orbits or pole
    artefacts. ``require_inside=False`` returns all plane solutions.
    """
    diag = diagnostics if diagnostics is not None else {}
    _check_finite_critical_set(p)
    H = composed_polynomial(p)
    roots = poly_roots(H, tol=1e-10, seed=seed)
    F, _ = p.F_dF(roots)
    with np.errstate(all="ignore"):
        raw = np.abs(np.conj(F) - roots)
    raw = np.where(np.isfinite(raw), raw, np.inf)
    cand = raw <= 1e-6 * np.maximum(1.0, np.abs(roots))
    z = roots[cand]
    polished, res, _ = _kernels.newton_many(z, p.packed, max_iter=8)
    moved = np.abs(polished - z) > 1e-6 * np.maximum(1.0, np.abs(z))
    res = np.where(moved, np.inf, res)
    ok = res <= tol
    diag["composed_degree"] = H.degree()
    diag["roots"] = roots
    diag["raw_residuals"] = raw
    diag["discarded"] = int(roots.size - ok.sum())
    return _finalize(p, polished[ok], res[ok], tol, band, diag, require_inside)


def critical_points_newton(
    p: RLPotential,
    box=None,
    grid_n: int = 256,
    tol: float = DEFAULT_TOL,
    *,
    band: float = DEGENERACY_BAND,
    require_inside: bool = True,
    diagnostics: dict | None = None,
) -> list[CriticalPoint]:
    """Critical points of v by grid-seeded damped Newton.

    Seeds are the grid nodes where ``|conj(F) - z|`` is a local minimum over
    the 3x3 neighbourhood, plus every node whose residual is small enough
    that a root could lie within about three grid cells. ``box`` is ``(xmin, xmax, ymin, ymax)`` and
    defaults to :func:`landscape_lab.topology.auto_box`.
    """
    if grid_n < 32:
        raise BadParameters("grid_n must be >= 32")
    diag = diagnostics if diagnostics is not None else {}
    _check_finite_critical_set(p)
    if box is None:
        from .topology import auto_box

        box = auto_box(p)
    xmin, xmax, ymin, ymax = box
    x = np.linspace(xmin, xmax, grid_n)
    y = np.linspace(ymin, ymax, grid_n)
    Zg = x[None, :] + 1j * y[:, None]
    spacing = max((xmax - xmin), (ymax - ymin)) / (grid_n - 1)
    with np.errstate(all="ignore"):
        F, dF = p.F_dF(Zg)
        r = np.abs(np.conj(F) - Zg)
        # a root within ~3 cells keeps |h| below (1 + |F'|) * distance
        small = r <= 3.0 * spacing * (1.0 + np.abs(dF))
    seeds = Zg[local_minima(r) | small]
    z, res, _ = _kernels.newton_many(seeds, p.packed, max_iter=60)
    ok = np.isfinite(res) & (res <= tol)
    diag["seeds"] = int(seeds.size)
    diag["non_converged"] = int((~ok).sum())
    return _finalize(p, z[ok], res[ok], tol, band, diag, require_inside)


# ---------------------------------------------------------------------------
# counting bounds


@dataclass
class BoundVerdicts:
    n: int
    N: int
    M: int
    S: int
    k: int
    checks: dict = field(default_factory=dict)
    asserted: bool = True

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())

    def attains_upper_bound(self) -> bool:
        return self.n >= 2 and self.N == 4 * self.n + self.k - 6


def bounds_report(p: RLPotential, census) -> BoundVerdicts:
    """Check ``M <= 2n-2``, ``N <= 4n+k-6``, ``k <= n+1`` and the Morse identity.

    ``k`` is the summed connectivity over components (for a single domain it
    is the connectivity). With degenerate critical points present the
    verdicts are returned unasserted and a :class:`DegenerateCriticals`
    warning is issued; otherwise any failure raises :class:`BoundViolation`.
    """
    n = p.degree
    M, S, k = census.global_M, census.global_S, census.global_k_sum
    N = M + S
    checks = {
        "M<=2n-2": M <= 2 * n - 2,
        "k<=n+1": all(c.k <= n + 1 for c in census.components),
        "morse": all(c.morse_ok for c in census.components),
    }
    if n >= 2:
        checks["N<=4n+k-6"] = N <= 4 * n + k - 6
    degenerate = census.global_degenerate > 0
    verdicts = BoundVerdicts(n=n, N=N, M=M, S=S, k=k, checks=checks, asserted=not degenerate)
    if degenerate:
        warnings.warn("degenerate critical points present; bounds reported but not asserted", DegenerateCriticals)
    elif not verdicts.all_pass:
        failed = [name for name, ok in checks.items() if not ok]
        raise BoundViolation(f"bound checks failed: {failed} (n={n}, M={M}, S={S}, k={k})")
    return verdicts


# ---------------------------------------------------------------------------
# Rhie-type extremal configurations

RHIE_A_GRID = np.round(np.arange(0.5, 1.5 + 1e-9, 0.05), 10)
RHIE_EPS_GRID = np.round(np.arange(0.01, 0.3 + 1e-9, 0.01), 10)
RHIE_T_VALUES = (1.0, 2.0, 4.0, 8.0)


def rhie_config(n: int, a: float, eps: float, T: float) -> RLPotential:
    """``eps log|z| + sum_j log|z - a_j| - |z|^2/2 + T`` with ``a_j = a exp(2 pi i j/(n-1))``.

    ``eps = 0`` drops the central mass and leaves the order-(n-1) polygon.
    """
    if int(n) != n or n < 4:
        raise BadParameters("rhie_config needs an integer n >= 4")
    if not a > 0:
        raise BadParameters("a must be positive")
    if not 0 <= eps < a:
        raise BadParameters("need 0 <= eps < a")
    if not T > 0:
        raise BadParameters("T must be positive")
    n = int(n)
    nodes = list(a * np.exp(2j * np.pi * np.arange(1, n) / (n - 1)))
    weights = [1.0] * (n - 1)
    if eps > 0:
        nodes = [0j] + nodes
        weights = [float(eps)] + weights
    return RLPotential.from_nodes(nodes, weights, T)


def rhie_search(
    n: int,
    a_grid=RHIE_A_GRID,
    eps_grid=RHIE_EPS_GRID,
    T_values=RHIE_T_VALUES,
    grid_n: int = 256,
    tol: float = DEFAULT_TOL,
):
    """First ``(a, eps, T)`` in the search box where both solvers find ``5n - 5`` critical points.

    Candidates are scanned with ``a`` outermost, then ``eps``. For each the
    plane solutions are counted by the composition solver; on a hit, the
    smallest ``T`` putting all of them inside Omega is taken and the Newton
    solver must agree.
    """
    if n < 4:
        raise BadParameters("rhie_search needs n >= 4")
    target = 5 * n - 5
    for a, eps in itertools.product(a_grid, eps_grid):
        if not eps < a:
            continue
        base = rhie_config(n, float(a), float(eps), 1.0)
        plane = critical_points_composition(base, tol, require_inside=False)
        if len(plane) != target:
            continue
        w = np.array([c.value for c in plane]) - base.level_T
        for T in T_values:
            if (w + T).min() <= INTERIOR_MARGIN:
                continue
            pot = base.with_level(T)
            comp = critical_points_composition(pot, tol)
            newt = critical_points_newton(pot, grid_n=grid_n, tol=tol)
            if len(comp) == target and len(newt) == target:
                return float(a), float(eps), float(T)
            break
    raise SearchExhausted(f"no (a, eps, T) in the search box gives {target} critical points for n={n}")


def summarize(points):
    m, s, d = count_kinds(points)
    return {"maxima": m, "saddles": s, "degenerate": d, "total": m + s + d}


__all__ = [
    "RLPotential",
    "CriticalPoint",
    "CriticalClass",
    "eval_v",
    "eval_grad",
    "critical_points_composition",
    "critical_points_newton",
    "composed_polynomial",
    "bounds_report",
    "BoundVerdicts",
    "rhie_config",
    "rhie_search",
    "omega_left",
    "omega_right",
    "omega_order6",
    "summarize",
]
