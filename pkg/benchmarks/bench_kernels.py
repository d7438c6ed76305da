"""Compare the numba kernels with their pure-numpy fallbacks.

Each kernel is run once per backend to warm up (JIT compile, caches), then
timed as the best of ``--repeat`` runs. Results of the two backends are
checked against each other before any timing is reported.

    python benchmarks/bench_kernels.py --grid 512 --repeat 3
"""
import argparse
import time

import numpy as np

from landscape_lab import _accel, _kernels, pde_grid, rl_domain, topology
from landscape_lab.rational import ComplexPolynomial, poly_roots


def best_of(fn, repeat):
    fn()
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(grid):
    pot = rl_domain.omega_order6()
    packed = pot.packed
    box, h = topology.make_grid(topology.auto_box(pot), grid)
    x = box.xmin + h * np.arange(grid)
    zs = (x[None, :] + 1j * x[:, None]).ravel() * 0.5
    seeds = zs[:: max(1, zs.size // 20000)]
    rng = np.random.default_rng(0)
    poly = ComplexPolynomial(rng.normal(size=38) + 1j * rng.normal(size=38))
    mask = topology.sample_sign_grid(pot, grid_n=grid, check_smoothness=False).interior()
    prob = pde_grid.disk_problem(min(grid, 257))

    def close(a, b, tol):
        return np.allclose(np.nan_to_num(a), np.nan_to_num(b), rtol=tol, atol=tol)

    return [
        ("v on grid", lambda nb: _kernels.v_many(zs, packed, use_numba=nb), lambda a, b: close(a, b, 1e-10)),
        ("F, F' on grid", lambda nb: _kernels.F_dF_many(zs, packed, use_numba=nb)[0], lambda a, b: close(a, b, 1e-10)),
        ("batched Newton", lambda nb: _kernels.newton_many(seeds, packed, use_numba=nb)[0], lambda a, b: close(a, b, 1e-8)),
        ("Aberth roots, degree 37", lambda nb: poly_roots(poly, use_numba=nb), lambda a, b: close(np.sort_complex(a), np.sort_complex(b), 1e-9)),
        ("component labelling", lambda nb: topology.label(mask, eight=False, use_numba=nb)[1], lambda a, b: a == b),
        ("PCG Poisson solve", lambda nb: pde_grid.solve(prob, use_numba=nb).values, lambda a, b: close(a, b, 1e-8)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _accel.numba is None:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"{'kernel':<26}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
    for name, fn, same in cases(args.grid):
        t_nb, r_nb = best_of(lambda: fn(True), args.repeat)
        t_np, r_np = best_of(lambda: fn(False), args.repeat)
        print(f"{name:<26}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}  {bool(same(r_nb, r_np))}")


if __name__ == "__main__":
    main()
