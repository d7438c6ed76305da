"""Hot loops for RL potentials: F, F', v on point clouds and batched Newton.

A potential is passed around "packed" as plain arrays so the same data feeds
both the numba kernels and the numpy fallbacks:

* ``poly``   -- polynomial part of F, ascending coefficients
* ``polyint``-- antiderivative of ``poly`` (zero constant term)
* ``nodes``  -- pole locations, shape (P,)
* ``coefs``  -- ``coefs[j, m-1]`` multiplies ``(z - nodes[j])**-m``, shape (P, Mmax)
* ``orders`` -- number of used columns per row
"""
import math

import numpy as np

from . import _accel

prange = _accel.numba.prange if _accel.numba is not None else range


# ---------------------------------------------------------------------------
# numba kernels


@_accel.njit
def _F_dF_point(z, poly, nodes, coefs, orders):
    F = 0j
    dF = 0j
    for k in range(poly.shape[0] - 1, -1, -1):
        dF = dF * z + F
        F = F * z + poly[k]
    for j in range(nodes.shape[0]):
        d = z - nodes[j]
        if d == 0:
            return complex(np.nan, np.nan), complex(np.nan, np.nan)
        inv = 1.0 / d
        pw = inv
        for m in range(orders[j]):
            c = coefs[j, m]
            F += c * pw
            dF -= (m + 1) * c * pw * inv
            pw *= inv
    return F, dF


@_accel.njit
def _v_point(z, polyint, nodes, coefs, orders, T):
    acc = 0j
    for k in range(polyint.shape[0] - 1, -1, -1):
        acc = acc * z + polyint[k]
    val = acc.real
    for j in range(nodes.shape[0]):
        d = z - nodes[j]
        if d == 0:
            return -np.inf if orders[j] == 1 and coefs[j, 0].real > 0 else np.nan
        val += 0.5 * coefs[j, 0].real * math.log(d.real * d.real + d.imag * d.imag)
        if orders[j] == 1:
            continue
        inv = 1.0 / d
        pw = inv
        for m in range(2, orders[j] + 1):
            val += (coefs[j, m - 1] * pw / (1 - m)).real
            pw *= inv
    return val - 0.5 * (z.real * z.real + z.imag * z.imag) + T


@_accel.njit(parallel=True)
def _v_many_numba(zs, polyint, nodes, coefs, orders, T):
    out = np.empty(zs.shape[0])
    for i in prange(zs.shape[0]):
        out[i] = _v_point(zs[i], polyint, nodes, coefs, orders, T)
    return out


@_accel.njit(parallel=True)
def _F_dF_many_numba(zs, poly, nodes, coefs, orders):
    F = np.empty(zs.shape[0], dtype=np.complex128)
    dF = np.empty(zs.shape[0], dtype=np.complex128)
    for i in prange(zs.shape[0]):
        F[i], dF[i] = _F_dF_point(zs[i], poly, nodes, coefs, orders)
    return F, dF


@_accel.njit
def _residual(z, poly, nodes, coefs, orders):
    F, dF = _F_dF_point(z, poly, nodes, coefs, orders)
    h = F.conjugate() - z
    return h, dF, abs(h)


@_accel.njit(parallel=True)
def _newton_many_numba(seeds, poly, nodes, coefs, orders, max_iter, target):
    n = seeds.shape[0]
    zout = seeds.copy()
    res = np.empty(n)
    iters = np.zeros(n, dtype=np.int64)
    for i in prange(n):
        z = seeds[i]
        h, dF, r = _residual(z, poly, nodes, coefs, orders)
        it = 0
        while it < max_iter and r > target * max(1.0, abs(z)) and math.isfinite(r):
            B = dF.conjugate()
            det = 1.0 - (B.real * B.real + B.imag * B.imag)
            if det == 0.0:
                break
            dz = (h + B * h.conjugate()) / det
            t = 1.0
            moved = False
            while t > 1.0 / 128:
                zn = z + t * dz
                hn, dFn, rn = _residual(zn, poly, nodes, coefs, orders)
                if math.isfinite(rn) and rn < r:
                    z, h, dF, r = zn, hn, dFn, rn
                    moved = True
                    break
                t *= 0.5
            it += 1
            if not moved:
                break
        zout[i] = z
        res[i] = r if math.isfinite(r) else np.inf
        iters[i] = it
    return zout, res, iters


# ---------------------------------------------------------------------------
# numpy fallbacks


def _F_dF_many_numpy(zs, poly, nodes, coefs, orders):
    zs = np.asarray(zs, dtype=complex)
    F = np.polynomial.polynomial.polyval(zs, poly) + 0j
    dF = np.polynomial.polynomial.polyval(zs, np.polynomial.polynomial.polyder(poly)) + 0j if len(poly) > 1 else np.zeros_like(zs)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(len(nodes)):
            inv = 1.0 / (zs - nodes[j])
            pw = inv
            for m in range(orders[j]):
                F = F + coefs[j, m] * pw
                dF = dF - (m + 1) * coefs[j, m] * pw * inv
                pw = pw * inv
    return F, dF


def _v_many_numpy(zs, polyint, nodes, coefs, orders, T):
    zs = np.asarray(zs, dtype=complex)
    val = np.polynomial.polynomial.polyval(zs, polyint).real if len(polyint) else np.zeros(zs.shape)
    val = np.array(val, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(len(nodes)):
            d = zs - nodes[j]
            val = val + coefs[j, 0].real * np.log(np.abs(d))
            inv = 1.0 / d
            pw = inv
            for m in range(2, orders[j] + 1):
                val = val + (coefs[j, m - 1] * pw / (1 - m)).real
                pw = pw * inv
    return val - 0.5 * np.abs(zs) ** 2 + T


def newton_fixed_point_numpy(F_dF, seeds, max_iter=60, target=1e-14):
    """Damped Newton for ``conj(F(z)) = z`` on a batch of seeds.

    ``F_dF(z) -> (F, F')`` must accept arrays. The real Jacobian of
    ``h = conj(F) - z`` has ``h_z = -1`` and ``h_zbar = conj(F')``, so the
    Newton step solves ``dz - B conj(dz) = h`` with ``B = conj(F')``.
    """
    z = np.array(seeds, dtype=complex).ravel()
    n = z.size
    iters = np.zeros(n, dtype=np.int64)

    def residual(zz):
        with np.errstate(all="ignore"):
            F, dF = F_dF(zz)
            h = np.conj(F) - zz
            r = np.abs(h)
        r = np.where(np.isfinite(r), r, np.inf)
        return h, dF, r

    h, dF, r = residual(z)
    active = r > target * np.maximum(1.0, np.abs(z))
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        B = np.conj(dF[idx])
        det = 1.0 - np.abs(B) ** 2
        with np.errstate(all="ignore"):
            dz = (h[idx] + B * np.conj(h[idx])) / det
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        for _ in range(7):
            pend = ~accepted
            if not pend.any():
                break
            zn = z[idx[pend]] + t[pend] * dz[pend]
            hn, dFn, rn = residual(zn)
            ok = np.isfinite(rn) & (rn < r[idx[pend]])
            sel = idx[pend][ok]
            z[sel], h[sel], dF[sel], r[sel] = zn[ok], hn[ok], dFn[ok], rn[ok]
            pos = np.flatnonzero(pend)
            accepted[pos[ok]] = True
            t[pend] *= 0.5
        iters[idx] += 1
        stalled = idx[~accepted]
        active[stalled] = False
        active &= r > target * np.maximum(1.0, np.abs(z))
    return z, r, iters


def _newton_many_numpy(seeds, poly, nodes, coefs, orders, max_iter, target):
    return newton_fixed_point_numpy(
        lambda zz: _F_dF_many_numpy(zz, poly, nodes, coefs, orders), seeds, max_iter, target
    )


# ---------------------------------------------------------------------------
# dispatch


def F_dF_many(zs, packed, use_numba=None):
    zs = np.ascontiguousarray(np.asarray(zs, dtype=complex).ravel())
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        return _F_dF_many_numba(zs, packed.poly, packed.nodes, packed.coefs, packed.orders)
    return _F_dF_many_numpy(zs, packed.poly, packed.nodes, packed.coefs, packed.orders)


def v_many(zs, packed, use_numba=None):
    zs = np.ascontiguousarray(np.asarray(zs, dtype=complex).ravel())
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        return _v_many_numba(zs, packed.polyint, packed.nodes, packed.coefs, packed.orders, packed.T)
    return _v_many_numpy(zs, packed.polyint, packed.nodes, packed.coefs, packed.orders, packed.T)


def newton_many(seeds, packed, max_iter=60, target=1e-14, use_numba=None):
    seeds = np.ascontiguousarray(np.asarray(seeds, dtype=complex).ravel())
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        return _newton_many_numba(seeds, packed.poly, packed.nodes, packed.coefs, packed.orders, max_iter, target)
    return _newton_many_numpy(seeds, packed.poly, packed.nodes, packed.coefs, packed.orders, max_iter, target)
