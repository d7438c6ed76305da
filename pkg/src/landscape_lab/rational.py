"""Complex polynomials, rational functions and a global polynomial root finder.

Rational functions are stored in partial-fraction form: a polynomial part
plus, for each pole node ``a``, coefficients ``c_1 .. c_M`` of
``c_m / (z - a)**m``. Compositions come back as a plain numerator/denominator
pair (:class:`RationalQuotient`), since re-expanding them into partial
fractions would need the roots of the new denominator.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import _accel
from .errors import DegreeOverflow, NonConvergence, PoleProximity, ZeroPolynomial

POLE_GUARD = 1e-12
ABERTH_MAX_ITER = 500
COMPOSE_MAX_DEGREE = 400

_EPS = np.finfo(float).eps


class ComplexPolynomial:
    """Polynomial with complex coefficients, ascending powers.

    Trailing exact zeros are trimmed at construction so that ``degree``
    is always ``len(coeffs) - 1``; the zero polynomial has ``coeffs == [0]``
    and degree ``-1``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[complex] | np.ndarray = (0,)):
        c = np.array(coeffs, dtype=complex).ravel()
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexPolynomial is immutable")

    @classmethod
    def from_roots(cls, roots, leading=1.0):
        if len(roots) == 0:
            return cls([leading])
        return cls(leading * npoly.polyfromroots(np.asarray(roots, dtype=complex)))

    def degree(self) -> int:
        return -1 if self.is_zero() else len(self.coeffs) - 1

    def as_quotient(self) -> "RationalQuotient":
        return RationalQuotient(self, ComplexPolynomial([1]))

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def trimmed(self, rtol: float) -> "ComplexPolynomial":
        """Drop leading coefficients below ``rtol * max|coeff|`` (round-off residue)."""
        c = self.coeffs
        if self.is_zero():
            return self
        cut = rtol * np.abs(c).max()
        keep = len(c)
        while keep > 1 and abs(c[keep - 1]) <= cut:
            keep -= 1
        return ComplexPolynomial(c[:keep])

    def __call__(self, z):
        return npoly.polyval(z, self.coeffs)

    def derivative(self) -> "ComplexPolynomial":
        if len(self.coeffs) == 1:
            return ComplexPolynomial([0])
        return ComplexPolynomial(npoly.polyder(self.coeffs))

    def antiderivative(self) -> "ComplexPolynomial":
        return ComplexPolynomial(npoly.polyint(self.coeffs))

    def __add__(self, other):
        return ComplexPolynomial(npoly.polyadd(self.coeffs, _as_poly(other).coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        return ComplexPolynomial(npoly.polysub(self.coeffs, _as_poly(other).coeffs))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        return ComplexPolynomial(npoly.polymul(self.coeffs, _as_poly(other).coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return ComplexPolynomial(-self.coeffs)

    def __pow__(self, k: int):
        return ComplexPolynomial(npoly.polypow(self.coeffs, k)) if k else ComplexPolynomial([1])

    def __eq__(self, other):
        if not isinstance(other, ComplexPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"ComplexPolynomial({self.coeffs.tolist()})"


def _as_poly(x) -> ComplexPolynomial:
    if isinstance(x, ComplexPolynomial):
        return x
    return ComplexPolynomial([x])


Z = ComplexPolynomial([0, 1])


class Pole(NamedTuple):
    node: complex
    coeffs: tuple  # c_1, c_2, ... for orders 1, 2, ...


class RationalFn:
    """Rational function ``poly_part(z) + sum_j sum_m c_jm / (z - a_j)**m``."""

    __slots__ = ("poly_part", "poles")

    def __init__(self, poly_part=None, poles: Sequence = ()):
        poly = _as_poly(poly_part) if poly_part is not None else ComplexPolynomial()
        clean = []
        for node, coeffs in poles:
            c = list(np.atleast_1d(np.asarray(coeffs, dtype=complex)))
            while c and c[-1] == 0:
                c.pop()
            if c:
                clean.append(Pole(complex(node), tuple(complex(x) for x in c)))
        nodes = [p.node for p in clean]
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                if nodes[i] == nodes[j]:
                    raise ValueError(f"duplicate pole node {nodes[i]}")
        object.__setattr__(self, "poly_part", poly)
        object.__setattr__(self, "poles", tuple(clean))

    def __setattr__(self, name, value):
        raise AttributeError("RationalFn is immutable")

    @classmethod
    def simple_poles(cls, nodes, residues, poly_part=None):
        return cls(poly_part, [(a, [c]) for a, c in zip(nodes, residues)])

    @property
    def nodes(self) -> np.ndarray:
        return np.array([p.node for p in self.poles], dtype=complex)

    def max_order(self) -> int:
        return max((len(p.coeffs) for p in self.poles), default=0)

    def denominator_degree(self) -> int:
        return sum(len(p.coeffs) for p in self.poles)

    def degree(self) -> int:
        """max(deg numerator, deg denominator) of the cleared-denominator form."""
        den = self.denominator_degree()
        if self.poly_part.is_zero():
            return den
        return self.poly_part.degree() + den

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.poly_part(z) + 0j
        for node, coeffs in self.poles:
            inv = 1.0 / (z - node)
            pw = inv
            for c in coeffs:
                out = out + c * pw
                pw = pw * inv
        return out

    def derivative(self) -> "RationalFn":
        poles = []
        for node, coeffs in self.poles:
            poles.append((node, [0j] + [-(m + 1) * c for m, c in enumerate(coeffs)]))
        return RationalFn(self.poly_part.derivative(), poles)

    def as_quotient(self) -> "RationalQuotient":
        factors = [ComplexPolynomial.from_roots([p.node] * len(p.coeffs)) for p in self.poles]
        den = ComplexPolynomial([1])
        for f in factors:
            den = den * f
        num = self.poly_part * den
        for j, (node, coeffs) in enumerate(self.poles):
            others = ComplexPolynomial([1])
            for i, f in enumerate(factors):
                if i != j:
                    others = others * f
            order = len(coeffs)
            for m, c in enumerate(coeffs, start=1):
                num = num + c * ComplexPolynomial.from_roots([node] * (order - m)) * others
        return RationalQuotient(num, den)

    def __repr__(self):
        return f"RationalFn(poly_part={self.poly_part!r}, poles={list(self.poles)!r})"


class RationalQuotient:
    """Rational function as an explicit ``num / den`` pair."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        object.__setattr__(self, "num", _as_poly(num))
        object.__setattr__(self, "den", _as_poly(den) if den is not None else ComplexPolynomial([1]))
        if self.den.is_zero():
            raise ZeroDivisionError("zero denominator")

    def __setattr__(self, name, value):
        raise AttributeError("RationalQuotient is immutable")

    def degree(self) -> int:
        return max(self.num.degree(), self.den.degree(), 0)

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def as_quotient(self) -> "RationalQuotient":
        return self

    def __repr__(self):
        return f"RationalQuotient({self.num!r}, {self.den!r})"


# ---------------------------------------------------------------------------
# evaluation / composition / conjugation


def rat_eval(f, z: complex, pole_guard: float = POLE_GUARD) -> complex:
    """Evaluate ``f`` at a single point, refusing points within ``pole_guard`` of a pole."""
    z = complex(z)
    if isinstance(f, RationalFn):
        for node, _ in f.poles:
            if abs(z - node) <= pole_guard:
                raise PoleProximity(f"z={z} within {pole_guard} of pole {node}")
        return complex(f(z))
    q = f.as_quotient()
    den = complex(q.den(z))
    scale = np.abs(q.den.coeffs).max() * max(1.0, abs(z)) ** max(q.den.degree(), 0)
    if abs(den) <= pole_guard * scale:
        raise PoleProximity(f"z={z} is (numerically) a pole")
    return complex(q.num(z)) / den


def rat_compose(outer, inner, max_degree: int = COMPOSE_MAX_DEGREE) -> RationalQuotient:
    """``outer(inner(z))`` with the denominators cleared.

    With ``outer = p/q`` of degree ``d`` and ``inner = P/Q``, the result is
    ``sum p_i P^i Q^(d-i) / sum q_i P^i Q^(d-i)``.
    """
    o = outer.as_quotient()
    i = inner.as_quotient()
    d_out, d_in = o.degree(), i.degree()
    if d_out < 1 or d_in < 1:
        raise ValueError("rat_compose needs operands of degree >= 1")
    if d_out * d_in > max_degree:
        raise DegreeOverflow(f"composed degree {d_out * d_in} exceeds cap {max_degree}")
    p = np.pad(o.num.coeffs, (0, d_out + 1 - len(o.num.coeffs)))
    q = np.pad(o.den.coeffs, (0, d_out + 1 - len(o.den.coeffs)))
    P_pows = [np.ones(1, dtype=complex)]
    Q_pows = [np.ones(1, dtype=complex)]
    for _ in range(d_out):
        P_pows.append(npoly.polymul(P_pows[-1], i.num.coeffs))
        Q_pows.append(npoly.polymul(Q_pows[-1], i.den.coeffs))
    num = np.zeros(1, dtype=complex)
    den = np.zeros(1, dtype=complex)
    for k in range(d_out + 1):
        term = npoly.polymul(P_pows[k], Q_pows[d_out - k])
        if p[k] != 0:
            num = npoly.polyadd(num, p[k] * term)
        if q[k] != 0:
            den = npoly.polyadd(den, q[k] * term)
    return RationalQuotient(ComplexPolynomial(num), ComplexPolynomial(den))


def conj_coeffs(f):
    """``f*(w) = conj(f(conj(w)))``: conjugate every coefficient and node."""
    if isinstance(f, ComplexPolynomial):
        return ComplexPolynomial(np.conj(f.coeffs))
    if isinstance(f, RationalQuotient):
        return RationalQuotient(conj_coeffs(f.num), conj_coeffs(f.den))
    return RationalFn(
        conj_coeffs(f.poly_part),
        [(np.conj(node), np.conj(np.asarray(coeffs))) for node, coeffs in f.poles],
    )


# ---------------------------------------------------------------------------
# Aberth-Ehrlich root finder


def _initial_guesses(coeffs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Points on circles whose radii come from the Newton polygon of ``coeffs``.

    The upper convex hull of ``(k, log|a_k|)`` gives, for each edge, a root
    modulus estimate and how many roots sit near it.
    """
    n = len(coeffs) - 1
    mags = np.abs(coeffs)
    idx = [k for k in range(n + 1) if mags[k] > 0]
    pts = [(k, math.log(mags[k])) for k in idx]
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    z = np.empty(n, dtype=complex)
    pos = 0
    sigma = 0.7
    for (k1, y1), (k2, y2) in zip(hull[:-1], hull[1:]):
        m = k2 - k1
        r = math.exp((y1 - y2) / m)
        theta = 2 * np.pi * np.arange(m) / m + 2 * np.pi * pos / n + sigma + rng.uniform(0, 2 * np.pi / max(m, 1))
        z[pos: pos + m] = r * np.exp(1j * theta)
        pos += m
    return z


def _aberth_numpy(coeffs, z, max_iter):
    n = len(coeffs) - 1
    rev = coeffs[::-1]
    dcoeffs = coeffs[1:] * np.arange(1, n + 1)
    drev = rev[1:] * np.arange(1, n + 1)
    abs_coeffs = np.abs(coeffs)
    done = np.zeros(n, dtype=bool)
    for it in range(max_iter):
        inner = np.abs(z) <= 1
        w = np.where(inner, z, 1.0 / np.where(inner, 1.0, z))
        # Horner on the direct or reversed polynomial, whichever keeps |w| <= 1
        p_in = npoly.polyval(w, coeffs)
        dp_in = npoly.polyval(w, dcoeffs)
        q = npoly.polyval(w, rev)
        dq = npoly.polyval(w, drev)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_in = p_in / dp_in
            ratio_out = z / (n - w * dq / q)
            ratio = np.where(inner, ratio_in, ratio_out)
            bound = np.where(inner, npoly.polyval(np.abs(w), abs_coeffs), npoly.polyval(np.abs(w), abs_coeffs[::-1]))
            pval = np.where(inner, np.abs(p_in), np.abs(q))
            done |= (pval <= 4 * _EPS * bound) | (np.abs(ratio) <= 2 * _EPS * np.abs(z)) | ~np.isfinite(ratio)
        if done.all():
            return z, it, True
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        s = (1.0 / diff).sum(axis=1) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = ratio / (1.0 - ratio * s)
        active = ~done & np.isfinite(corr)
        z = np.where(active, z - corr, z)
    return z, max_iter, bool(done.all())


def _aberth_kernel(coeffs, z, max_iter):
    n = coeffs.shape[0] - 1
    eps = 2.220446049250313e-16
    done = np.zeros(n, dtype=np.bool_)
    for it in range(max_iter):
        all_done = True
        for i in range(n):
            if done[i]:
                continue
            zi = z[i]
            if abs(zi) <= 1.0:
                p = coeffs[n]
                dp = 0j
                b = abs(coeffs[n])
                az = abs(zi)
                for k in range(n - 1, -1, -1):
                    dp = dp * zi + p
                    p = p * zi + coeffs[k]
                    b = b * az + abs(coeffs[k])
                if abs(p) <= 4 * eps * b or dp == 0:
                    done[i] = True
                    continue
                ratio = p / dp
            else:
                w = 1.0 / zi
                q = coeffs[0]
                dq = 0j
                b = abs(coeffs[0])
                aw = abs(w)
                for k in range(1, n + 1):
                    dq = dq * w + q
                    q = q * w + coeffs[k]
                    b = b * aw + abs(coeffs[k])
                if abs(q) <= 4 * eps * b:
                    done[i] = True
                    continue
                den = n - w * dq / q
                if den == 0:
                    done[i] = True
                    continue
                ratio = zi / den
            if abs(ratio) <= 2 * eps * abs(zi):
                done[i] = True
                continue
            s = 0j
            for j in range(n):
                if j != i:
                    s += 1.0 / (zi - z[j])
            corr = ratio / (1.0 - ratio * s)
            z[i] = zi - corr
            all_done = False
        if all_done:
            return z, it, True
    return z, max_iter, False


_aberth_numba = _accel.njit(_aberth_kernel) if _accel.numba is not None else _aberth_kernel


def _aberth(coeffs, z, max_iter, use_numba=None):
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    if use_numba:
        return _aberth_numba(coeffs, z.copy(), max_iter)
    return _aberth_numpy(coeffs, z.copy(), max_iter)


def poly_roots(p, tol: float = 1e-12, seed: int = 0, max_iter: int = ABERTH_MAX_ITER, use_numba=None) -> np.ndarray:
    """All roots of ``p`` (with multiplicity) by Aberth-Ehrlich iteration.

    Every returned root satisfies ``|p(r)| <= tol * max|a_k| * max(1, |r|)**n``;
    otherwise :class:`NonConvergence` is raised. Results are sorted by
    (real, imag) and are deterministic for a fixed ``seed``.
    """
    p = _as_poly(p) if not isinstance(p, (list, tuple, np.ndarray)) else ComplexPolynomial(p)
    if p.is_zero():
        raise ZeroPolynomial("the zero polynomial has no finite root set")
    n = p.degree()
    if n < 1:
        raise ValueError("poly_roots needs degree >= 1")
    coeffs = p.coeffs
    # exact roots at the origin
    nz0 = int(np.flatnonzero(coeffs)[0])
    zeros = np.zeros(nz0, dtype=complex)
    c = coeffs[nz0:] / coeffs[-1]
    m = len(c) - 1
    if m == 0:
        roots = zeros
    elif m == 1:
        roots = np.concatenate([zeros, [-c[0]]])
    else:
        rng = np.random.default_rng(seed)
        z0 = _initial_guesses(c, rng)
        z, _, ok = _aberth(c, z0, max_iter, use_numba)
        if not ok:
            raise NonConvergence(f"Aberth iteration did not converge in {max_iter} sweeps (degree {m})")
        roots = np.concatenate([zeros, z])
    scale = np.abs(coeffs).max()
    resid = np.abs(p(roots))
    allowed = tol * scale * np.maximum(1.0, np.abs(roots)) ** n
    if not np.all(resid <= allowed):
        worst = int(np.argmax(resid / allowed))
        raise NonConvergence(f"root {roots[worst]} has residual {resid[worst]:.3e} > {allowed[worst]:.3e}")
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]
