"""Job configuration files (TOML, ``schema = 1``).

A configuration looks like::

    schema = 1
    kind = "rl"
    name = "fig1_left"
    grid_n = 512
    seed = 0
    tol = 1e-9

    [params]
    nodes = [[1.0, 0.0], [-0.5, 0.866], [-0.5, -0.866]]
    weights = [0.75, 0.75, 0.75]
    T = 0.5

    [output]
    csv = true
    svg = true

    [expect]
    M = 4
    S = 6
    k = 4

Complex numbers are written as ``[re, im]`` pairs (a bare real is accepted
on input). Unknown keys anywhere are errors.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigParseError, ConfigValidationError

SCHEMA_VERSION = 1
KINDS = ("rl", "rhie", "quadrature", "oval", "pde", "neck", "dumbbell")
TOP_KEYS = {"schema", "kind", "name", "grid_n", "seed", "tol", "params", "output", "expect"}
OUTPUT_KEYS = {"dir", "csv", "svg", "levels"}
EXPECT_KEYS = {"M", "S", "k", "N", "degenerate"}

# per kind: name -> (type tag, required, default)
PARAM_SCHEMA = {
    "rl": {
        "nodes": ("complex_list", True, None),
        "weights": ("real_list", True, None),
        "T": ("real", True, None),
        "poly": ("complex_list", False, None),
    },
    "rhie": {
        "n": ("int", True, None),
        "a": ("real", False, None),
        "eps": ("real", False, None),
        "T": ("real", False, None),
    },
    "quadrature": {"coeffs": ("complex_list", True, None)},
    "oval": {"R": ("real", False, None), "a": ("real", False, None), "sweep_n": ("int", False, 128)},
    "pde": {"mask": ("str", True, None), "box": ("real_list", True, None), "rhs": ("real", False, -2.0)},
    "neck": {"eps": ("real", True, None), "M": ("real", False, 10.0)},
    "dumbbell": {"eps": ("real", True, None), "delta": ("real", False, 0.05), "n_disks": ("int", False, 2)},
}

DEFAULT_GRID = {"rl": 512, "rhie": 512, "quadrature": 512, "oval": 512, "pde": 0, "neck": 641, "dumbbell": 768}


@dataclass
class OutputSpec:
    dir: str = "out"
    csv: bool = False
    svg: bool = False
    levels: int = 12


@dataclass
class JobConfig:
    kind: str
    params: dict
    name: str = "job"
    grid_n: int = 512
    seed: int = 0
    tol: float = 1e-9
    output: OutputSpec = field(default_factory=OutputSpec)
    expect: dict = field(default_factory=dict)
    source: str | None = field(default=None, compare=False)


def _complex(key, x):
    if isinstance(x, bool):
        raise ConfigValidationError(key, "expected a number")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in x):
        return complex(float(x[0]), float(x[1]))
    raise ConfigValidationError(key, f"expected a complex number as [re, im], got {x!r}")


def _real(key, x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
            raise ConfigValidationError(key, f"complex value {x!r} not allowed here; must be real")
        raise ConfigValidationError(key, f"expected a real number, got {x!r}")
    if not math.isfinite(x):
        raise ConfigValidationError(key, "must be finite")
    return float(x)


def _convert(key, tag, x):
    if tag == "real":
        return _real(key, x)
    if tag == "int":
        if isinstance(x, bool) or not isinstance(x, int):
            raise ConfigValidationError(key, f"expected an integer, got {x!r}")
        return x
    if tag == "str":
        if not isinstance(x, str):
            raise ConfigValidationError(key, "expected a string")
        return x
    if not isinstance(x, list):
        raise ConfigValidationError(key, "expected a list")
    if tag == "real_list":
        return [_real(f"{key}[{i}]", t) for i, t in enumerate(x)]
    return [_complex(f"{key}[{i}]", t) for i, t in enumerate(x)]


def _check_kind_params(kind, params):
    if kind == "rl":
        if len(params["nodes"]) != len(params["weights"]):
            raise ConfigValidationError("params.weights", "must have one weight per node")
        if not params["nodes"]:
            raise ConfigValidationError("params.nodes", "at least one node required")
    elif kind == "rhie":
        given = [params.get(k) is not None for k in ("a", "eps", "T")]
        if any(given) and not all(given):
            raise ConfigValidationError("params", "give all of a, eps, T or none (search)")
    elif kind == "oval":
        if (params.get("R") is None) == (params.get("a") is None):
            raise ConfigValidationError("params", "give exactly one of R or a")
    elif kind == "pde":
        if len(params["box"]) != 4:
            raise ConfigValidationError("params.box", "expected [xmin, xmax, ymin, ymax]")
    elif kind in ("neck", "dumbbell"):
        if not params["eps"] > 0:
            raise ConfigValidationError("params.eps", "must be positive")


def validate(raw: dict, source: str | None = None) -> JobConfig:
    """Turn a parsed TOML table into a :class:`JobConfig`, rejecting anything unexpected."""
    for key in raw:
        if key not in TOP_KEYS:
            raise ConfigValidationError(key, "unknown key")
    if "schema" not in raw:
        raise ConfigValidationError("schema", "missing (expected schema = 1)")
    if raw["schema"] != SCHEMA_VERSION:
        raise ConfigValidationError("schema", f"unsupported version {raw['schema']!r}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigValidationError("kind", f"expected one of {', '.join(KINDS)}, got {kind!r}")

    schema = PARAM_SCHEMA[kind]
    rawp = raw.get("params", {})
    if not isinstance(rawp, dict):
        raise ConfigValidationError("params", "expected a table")
    for key in rawp:
        if key not in schema:
            raise ConfigValidationError(f"params.{key}", f"unknown parameter for kind {kind!r}")
    params = {}
    for key, (tag, required, default) in schema.items():
        if key in rawp:
            params[key] = _convert(f"params.{key}", tag, rawp[key])
        elif required:
            raise ConfigValidationError(f"params.{key}", "required parameter missing")
        elif default is not None:
            params[key] = default
    _check_kind_params(kind, params)

    grid_n = raw.get("grid_n", DEFAULT_GRID[kind])
    if isinstance(grid_n, bool) or not isinstance(grid_n, int) or (grid_n < 64 and not (kind == "pde" and grid_n == 0)):
        raise ConfigValidationError("grid_n", "must be an integer >= 64")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigValidationError("seed", "must be an integer")
    tol = _real("tol", raw.get("tol", 1e-9))
    if not tol > 0:
        raise ConfigValidationError("tol", "must be positive")
    name = raw.get("name", Path(source).stem if source else "job")
    if not isinstance(name, str):
        raise ConfigValidationError("name", "must be a string")

    rawo = raw.get("output", {})
    if not isinstance(rawo, dict):
        raise ConfigValidationError("output", "expected a table")
    for key in rawo:
        if key not in OUTPUT_KEYS:
            raise ConfigValidationError(f"output.{key}", "unknown key")
    out = OutputSpec(**rawo)
    if not isinstance(out.dir, str) or not isinstance(out.csv, bool) or not isinstance(out.svg, bool):
        raise ConfigValidationError("output", "dir must be a string, csv and svg booleans")
    if isinstance(out.levels, bool) or not isinstance(out.levels, int) or out.levels < 1:
        raise ConfigValidationError("output.levels", "must be a positive integer")

    expect = raw.get("expect", {})
    if not isinstance(expect, dict):
        raise ConfigValidationError("expect", "expected a table")
    for key, val in expect.items():
        if key not in EXPECT_KEYS:
            raise ConfigValidationError(f"expect.{key}", "unknown key")
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigValidationError(f"expect.{key}", "must be an integer")
    return JobConfig(kind, params, name, grid_n, seed, tol, out, dict(expect), source)


_LOC = re.compile(r"line (\d+), column (\d+)")


def parse_string(text: str, source: str | None = None) -> JobConfig:
    if not text.strip():
        raise ConfigParseError("empty configuration", 1, 1)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = _LOC.search(str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        msg = getattr(exc, "msg", str(exc))
        raise ConfigParseError(msg, line, col) from None
    if not raw:
        raise ConfigParseError("configuration has no keys", 1, 1)
    return validate(raw, source)


def parse_config(path) -> JobConfig:
    """Read and validate a configuration file.

    Raises
    ------
    ConfigParseError
        Malformed or empty file; carries ``line`` and ``column``.
    ConfigValidationError
        Well-formed TOML that breaks the schema; ``key`` names the culprit.
    """
    path = Path(path)
    return parse_string(path.read_text(encoding="utf-8"), str(path))


def _plain(tag, val):
    if tag == "complex_list":
        return [[v.real, v.imag] for v in val]
    return val


def to_dict(job: JobConfig) -> dict:
    schema = PARAM_SCHEMA[job.kind]
    out = {"schema": SCHEMA_VERSION, "kind": job.kind, "name": job.name, "grid_n": job.grid_n, "seed": job.seed, "tol": job.tol}
    out["params"] = {k: _plain(schema[k][0], v) for k, v in job.params.items() if v is not None}
    out["output"] = {"dir": job.output.dir, "csv": job.output.csv, "svg": job.output.svg, "levels": job.output.levels}
    if job.expect:
        out["expect"] = dict(job.expect)
    return out


def write_config(job: JobConfig, path) -> None:
    Path(path).write_text(tomli_w.dumps(to_dict(job)), encoding="utf-8")
