"""Run a configured job and collect everything it found into a :class:`Report`."""
from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pde_grid, rl_domain, topology
from ._numerics import hausdorff
from .config import JobConfig
from .critical import CriticalClass, count_kinds
from .errors import BoundViolation, LandscapeError
from .neumann_oval import NeumannOval, newton_sweep, oval_critical_points, sample_field
from .quadrature import PolynomialMap, image_domain_problem, solve_critical_system

CROSS_CHECK_TOL = 1e-8
CSV_HEADER = ["re", "im", "class", "multiplier", "v", "residual"]


@dataclass
class Report:
    """Outcome of one job.

    ``failures`` holds assertion-grade problems (bound, Morse, cross-check,
    expectation); ``warnings`` holds everything that should be read but does
    not fail the run.
    """

    job: JobConfig
    points: list = field(default_factory=list)
    census: object = None
    bounds: object = None
    cross_check: dict | None = None
    extras: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    field: object = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def counts(self):
        m, s, d = count_kinds(self.points)
        return {"M": m, "S": s, "degenerate": d, "N": m + s}

    def census_rows(self):
        c = self.census
        if c is None:
            return []
        if isinstance(c, pde_grid.GridCensus):
            c = c.topology
        rows = [[comp.component_id, comp.M, comp.S, comp.k, comp.degenerate, comp.morse_ok] for comp in c.components]
        rows.append(["global", c.global_M, c.global_S, c.global_k_sum, c.global_degenerate, all(x.morse_ok for x in c.components)])
        return rows

    def summary_lines(self):
        j = self.job
        cnt = self.counts
        lines = [f"{j.name} [{j.kind}]  M={cnt['M']} S={cnt['S']} degenerate={cnt['degenerate']} N={cnt['N']}"]
        for row in self.census_rows():
            label = "all components" if row[0] == "global" else f"component {row[0]}"
            lines.append(f"  {label}: M={row[1]} S={row[2]} k={row[3]} degenerate={row[4]} morse={'ok' if row[5] else 'not applicable' if row[4] else 'FAILED'}")
        if self.bounds is not None:
            checks = ", ".join(f"{k}:{'ok' if v else 'FAILED'}" for k, v in self.bounds.checks.items())
            tag = "" if self.bounds.asserted else " (not asserted)"
            lines.append(f"  bounds n={self.bounds.n}: {checks}{tag}")
            if self.bounds.attains_upper_bound():
                lines.append("  N attains 4n+k-6")
        if self.cross_check is not None:
            cc = self.cross_check
            lines.append(f"  cross-check: {cc['method']} distance={cc['distance']:.3g} {'agree' if cc['agree'] else 'DISAGREE'}")
        for k, v in self.extras.items():
            lines.append(f"  {k} = {v}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        for f in self.failures:
            lines.append(f"  FAILED: {f}")
        lines.append(f"  {'PASS' if self.ok else 'FAIL'}  ({sum(self.timings.values()):.2f} s)")
        return lines


class _Timer:
    def __init__(self, report, key):
        self.report, self.key = report, key

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timings[self.key] = self.report.timings.get(self.key, 0.0) + time.perf_counter() - self.t0


def _morse_verdict(rep, census):
    topo = census.topology if isinstance(census, pde_grid.GridCensus) else census
    if topo is None:
        return
    if not all(c.morse_ok for c in topo.components):
        if topo.global_degenerate:
            rep.warnings.append("Morse identity not checked: degenerate critical points present")
        else:
            rep.failures.append(f"Morse identity fails: {topo.summary()}")


def _run_rl(job, rep, pot):
    with _Timer(rep, "composition"):
        comp = rl_domain.critical_points_composition(pot, job.tol, seed=job.seed, diagnostics=rep.diagnostics.setdefault("composition", {}))
    with _Timer(rep, "newton"):
        newt = rl_domain.critical_points_newton(pot, tol=job.tol, diagnostics=rep.diagnostics.setdefault("newton", {}))
    a = np.array([c.location for c in comp])
    b = np.array([c.location for c in newt])
    dist = hausdorff(a, b) if a.size and b.size else (0.0 if a.size == b.size else math.inf)
    agree = len(comp) == len(newt) and dist <= CROSS_CHECK_TOL
    rep.cross_check = {"method": "composition vs newton", "distance": float(dist), "agree": agree, "counts": (len(comp), len(newt))}
    if not agree:
        rep.failures.append(f"solvers disagree: {len(comp)} vs {len(newt)} points, Hausdorff {dist:.3g}")
    rep.points = comp
    with _Timer(rep, "census"):
        fld = topology.sample_sign_grid(pot, grid_n=job.grid_n)
        rep.field = fld
        rep.census = topology.census(fld, comp)
    try:
        rep.bounds = rl_domain.bounds_report(pot, rep.census)
    except BoundViolation as exc:
        rep.failures.append(str(exc))
    _morse_verdict(rep, rep.census)


def _job_rl(job, rep):
    p = job.params
    poly = p.get("poly")
    pot = rl_domain.RLPotential.from_nodes(p["nodes"], p["weights"], p["T"], poly_part=poly)
    _run_rl(job, rep, pot)


def _job_rhie(job, rep):
    p = job.params
    n = p["n"]
    if p.get("a") is None:
        with _Timer(rep, "search"):
            a, eps, T = rl_domain.rhie_search(n, tol=job.tol)
    else:
        a, eps, T = p["a"], p["eps"], p["T"]
    rep.extras.update(a=a, eps=eps, T=T, target=5 * n - 5)
    pot = rl_domain.rhie_config(n, a, eps, T)
    _run_rl(job, rep, pot)
    if len(rep.points) != 5 * n - 5:
        rep.warnings.append(f"{len(rep.points)} critical points, extremal count is {5 * n - 5}")


def _job_quadrature(job, rep):
    phi = PolynomialMap(job.params["coeffs"])
    with _Timer(rep, "newton"):
        rep.points = solve_critical_system(phi, diagnostics=rep.diagnostics.setdefault("newton", {}))
    with _Timer(rep, "fd"):
        sol = pde_grid.solve(image_domain_problem(phi, job.grid_n))
        gc = pde_grid.grid_census(sol)
    rep.field = sol
    rep.census = gc
    m, s, _ = count_kinds(rep.points)
    agree = (gc.M, gc.S) == (m, s)
    rep.cross_check = {"method": "newton vs fd census", "distance": 0.0 if agree else math.inf, "agree": agree, "counts": ((m, s), (gc.M, gc.S))}
    if not agree:
        rep.failures.append(f"FD census ({gc.M}, {gc.S}) differs from Newton ({m}, {s})")
    rep.extras["cap"] = (2 * phi.degree - 1) ** 2
    rep.extras["preimages"] = [complex(round(c.preimage.real, 12), round(c.preimage.imag, 12)) for c in rep.points]
    _morse_verdict(rep, gc)


def _job_oval(job, rep):
    p = job.params
    o = NeumannOval(p["a"]) if p.get("a") is not None else NeumannOval.from_R(p["R"])
    rep.extras.update(R=o.R, a=o.a)
    rep.points = oval_critical_points(o)
    with _Timer(rep, "sweep"):
        swept = newton_sweep(o, grid_n=p.get("sweep_n", 128))
    nonreal = [c.location for c in swept if abs(c.location.imag) > 1e-8]
    rep.diagnostics["sweep"] = {"found": len(swept), "nonreal": len(nonreal)}
    if nonreal:
        rep.failures.append(f"Newton sweep found nonreal critical points: {nonreal[:4]}")
    with _Timer(rep, "census"):
        fld = sample_field(o, job.grid_n)
        rep.field = fld
        rep.census = topology.census(fld, rep.points)
    if any(c.kind is CriticalClass.DEGENERATE for c in rep.points):
        rep.warnings.append("degenerate critical point (triple root at the origin)")
    _morse_verdict(rep, rep.census)


def _job_pde(job, rep):
    p = job.params
    mask_path = Path(p["mask"])
    if not mask_path.is_absolute() and job.source:
        mask_path = Path(job.source).parent / mask_path
    interior = pde_grid.read_pgm(mask_path)
    with _Timer(rep, "fd"):
        sol = pde_grid.solve(pde_grid.mask_problem(interior, p["box"], rhs=p["rhs"]))
        gc = pde_grid.grid_census(sol)
    rep.field, rep.census, rep.points = sol, gc, gc.points
    _morse_verdict(rep, gc)


def _job_neck(job, rep):
    p = job.params
    try:
        with _Timer(rep, "fd"):
            res = pde_grid.neck_experiment(p["eps"], p["M"], job.grid_n)
    except BoundViolation as exc:
        rep.failures.append(str(exc))
        return
    rep.field = res.solution
    rep.extras.update(sup_mid=res.sup_mid, bound=res.bound, holds=res.holds)


def _job_dumbbell(job, rep):
    p = job.params
    try:
        with _Timer(rep, "fd"):
            gc = pde_grid.dumbbell_experiment(p["eps"], p["delta"], job.grid_n, p["n_disks"])
    except BoundViolation as exc:
        rep.failures.append(str(exc))
        return
    rep.field, rep.census, rep.points = gc.field, gc, gc.points
    rep.extras["required"] = 2 * p["n_disks"] - 1
    _morse_verdict(rep, gc)


_DISPATCH = {
    "rl": _job_rl,
    "rhie": _job_rhie,
    "quadrature": _job_quadrature,
    "oval": _job_oval,
    "pde": _job_pde,
    "neck": _job_neck,
    "dumbbell": _job_dumbbell,
}


def _check_expect(rep):
    if not rep.job.expect:
        return
    got = dict(rep.counts)
    c = rep.census.topology if isinstance(rep.census, pde_grid.GridCensus) else rep.census
    if c is not None:
        got["k"] = c.global_k_sum
    for key, want in sorted(rep.job.expect.items()):
        if got.get(key) != want:
            rep.failures.append(f"expected {key}={want}, got {got.get(key)}")


class JobError(LandscapeError):
    """A module error, tagged with the job that raised it."""


def run(job: JobConfig) -> Report:
    """Dispatch ``job`` to its module and assemble the report.

    Module errors propagate as :class:`JobError` naming the job; bound and
    identity failures are collected in ``Report.failures``.
    """
    rep = Report(job)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            _DISPATCH[job.kind](job, rep)
        except LandscapeError as exc:
            raise JobError(f"{job.name} ({job.kind}): {type(exc).__name__}: {exc}") from exc
    for w in caught:
        msg = f"{w.category.__name__}: {w.message}"
        if msg not in rep.warnings:
            rep.warnings.append(msg)
    _check_expect(rep)
    return rep


def _fmt(x):
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return str(x)


def export_csv(report: Report, path) -> None:
    """One row per critical point, then a census block; RFC 4180 quoting, CRLF line ends."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow(CSV_HEADER)
        for c in report.points:
            w.writerow([_fmt(c.location.real), _fmt(c.location.imag), c.kind.value, _fmt(c.multiplier), _fmt(c.value), _fmt(c.residual)])
        w.writerow([])
        w.writerow(["census", "component", "M", "S", "k", "degenerate", "morse"])
        for row in report.census_rows():
            w.writerow(["census"] + [str(x) for x in row])
        if report.bounds is not None:
            for name, ok in report.bounds.checks.items():
                w.writerow(["bound", name, "pass" if ok else "fail"])
        for k, v in report.extras.items():
            if isinstance(v, (int, float, str, bool)):
                w.writerow(["extra", k, _fmt(v)])
