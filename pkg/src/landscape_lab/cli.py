"""``landscape-lab`` command line.

    landscape-lab run CONFIG... [--out DIR] [--grid N] [--seed S] [--svg] [--csv] [--jobs J]
    landscape-lab verify-all [--out DIR] [--jobs J] [--svg] [--csv]

Exit status is 0 when every job passes, 1 when any bound, identity,
cross-check or expectation fails (or a job raises), 2 for unusable
configuration files.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .config import parse_config
from .errors import ConfigParseError, ConfigValidationError, LandscapeError
from .render import render_svg
from .report import export_csv, run


def shipped_configs():
    """Paths of the configuration files bundled with the package, sorted by name."""
    root = resources.files("landscape_lab") / "configs"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml"))


def _execute(path, out=None, grid=None, seed=None, svg=False, csv=False):
    """Run one config; returns (ok, text). Runs in worker processes, so everything is plain data."""
    job = parse_config(path)
    changes = {}
    if grid is not None:
        changes["grid_n"] = grid
    if seed is not None:
        changes["seed"] = seed
    if changes:
        job = dataclasses.replace(job, **changes)
    try:
        rep = run(job)
    except LandscapeError as exc:
        return False, f"{job.name} [{job.kind}]\n  ERROR: {exc}\n  FAIL"
    lines = rep.summary_lines()
    want_csv = csv or job.output.csv
    want_svg = svg or job.output.svg
    if want_csv or want_svg:
        outdir = Path(out or job.output.dir)
        outdir.mkdir(parents=True, exist_ok=True)
        if want_csv:
            export_csv(rep, outdir / f"{job.name}.csv")
            lines.append(f"  wrote {outdir / (job.name + '.csv')}")
        if want_svg and rep.field is not None:
            render_svg(rep.field, rep.points, path=outdir / f"{job.name}.svg", level_count=job.output.levels)
            lines.append(f"  wrote {outdir / (job.name + '.svg')}")
    return rep.ok, "\n".join(lines)


def _run_many(paths, jobs, **kw):
    for p in paths:
        try:
            parse_config(p)  # fail fast on bad files before spending time on good ones
        except ConfigParseError as exc:
            raise ConfigParseError(f"{p}: {exc.args[0]}") from None
        except ConfigValidationError as exc:
            raise ConfigValidationError(f"{p}: {exc.key}", str(exc).split(": ", 1)[1]) from None
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_execute_kw, [(p, kw) for p in paths]))
    else:
        results = [_execute(p, **kw) for p in paths]
    for _, text in results:
        print(text)
    return results


def _execute_kw(args):
    path, kw = args
    return _execute(path, **kw)


def build_parser():
    ap = argparse.ArgumentParser(prog="landscape-lab", description="Critical points of landscape functions.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one or more job configurations")
    r.add_argument("configs", nargs="+", type=Path)
    r.add_argument("--out", help="output directory (overrides output.dir)")
    r.add_argument("--grid", type=int, help="override grid_n")
    r.add_argument("--seed", type=int, help="override seed")
    r.add_argument("--svg", action="store_true", help="write an SVG contour figure")
    r.add_argument("--csv", action="store_true", help="write a CSV report")
    r.add_argument("--jobs", type=int, default=1, help="run configs in this many processes")

    v = sub.add_parser("verify-all", help="run every shipped configuration and summarise")
    v.add_argument("--out", help="output directory")
    v.add_argument("--svg", action="store_true")
    v.add_argument("--csv", action="store_true")
    v.add_argument("--jobs", type=int, default=1)

    sub.add_parser("list", help="list shipped configurations")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for p in shipped_configs():
                print(p)
            return 0
        if args.command == "run":
            if args.grid is not None and args.grid < 64:
                print("error: --grid must be >= 64", file=sys.stderr)
                return 2
            results = _run_many(
                [str(p) for p in args.configs], max(1, args.jobs),
                out=args.out, grid=args.grid, seed=args.seed, svg=args.svg, csv=args.csv,
            )
            return 0 if all(ok for ok, _ in results) else 1
        paths = [str(p) for p in shipped_configs()]
        results = _run_many(paths, max(1, args.jobs), out=args.out, svg=args.svg, csv=args.csv)
        print()
        for p, (ok, _) in zip(paths, results):
            print(f"{'PASS' if ok else 'FAIL'}  {Path(p).stem}")
        failed = sum(not ok for ok, _ in results)
        print(f"{len(results) - failed}/{len(results)} configurations pass")
        return 0 if failed == 0 else 1
    except (ConfigParseError, ConfigValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
