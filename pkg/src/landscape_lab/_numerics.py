"""Small numeric helpers shared by the analytic modules."""
import numpy as np


def dedup_points(points, radius):
    """Indices of a greedy de-duplication of complex ``points``.

    Points are visited in (real, imag) order so the result does not depend on
    the order in which solvers produced them.
    """
    pts = np.asarray(points, dtype=complex)
    order = np.lexsort((pts.imag, pts.real))
    kept = []
    for i in order:
        if all(abs(pts[i] - pts[j]) > radius for j in kept):
            kept.append(int(i))
    return kept


def sort_key(z):
    return (round(z.real, 12), round(z.imag, 12))


def fd_gradient(f, z, h=1e-5):
    """Central-difference gradient of a real function of a complex variable, as ``f_x + i f_y``."""
    fx = (f(z + h) - f(z - h)) / (2 * h)
    fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return fx + 1j * fy


def fd_hessian(f, z, h=1e-4):
    """2x2 central-difference Hessian of a real function of a complex variable."""
    f0 = f(z)
    fxx = (f(z + h) - 2 * f0 + f(z - h)) / h**2
    fyy = (f(z + 1j * h) - 2 * f0 + f(z - 1j * h)) / h**2
    fxy = (f(z + h + 1j * h) - f(z + h - 1j * h) - f(z - h + 1j * h) + f(z - h - 1j * h)) / (4 * h**2)
    return np.array([[fxx, fxy], [fxy, fyy]])


def local_minima(a):
    """Boolean mask of entries no larger than any of their 8 neighbours (finite entries only)."""
    a = np.where(np.isfinite(a), a, np.inf)
    pad = np.pad(a, 1, constant_values=np.inf)
    ny, nx = a.shape
    mask = np.isfinite(a)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            mask &= a <= pad[1 + dy: 1 + dy + ny, 1 + dx: 1 + dx + nx]
    return mask


def hausdorff(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return np.inf
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
