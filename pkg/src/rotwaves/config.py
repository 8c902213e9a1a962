"""TOML run configuration.

Example::

    gravity = 9.81
    surface_tension = 0.074
    mass_flux_p0 = -1.0

    [vorticity]
    type = "PiecewiseConstant"
    breakpoints = [-1.0, -0.5, 0.0]
    values = [2.0, -1.0]

    [grid]
    nq = 64
    np = 41

    [solver]
    max_steps = 20

    [bifurcation]
    n = 1
    k = [1, 2, 3]

    [laminar]
    lambdas = [2.0, 3.0, 4.0]

    [output]
    directory = "out"
    snapshot_stride = 5
"""

import re
import sys
from dataclasses import dataclass, field, fields as dc_fields

from .errors import ConfigError
from .grid import TensorGrid
from .params import PhysicalParams, VorticitySpec
from .solver import SolverConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "OutputConfig", "load_config", "parse_config"]


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv", "json")
    snapshot_stride: int = 5


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalParams
    vorticity: VorticitySpec
    grid: TensorGrid = field(default_factory=TensorGrid)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    n: int = None
    k: tuple = (1,)
    lambdas: tuple = ()
    dispersion_steps: int = None


def _line_of(text, key):
    if text is None:
        return None
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=", re.M)
    m = pat.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _require(table, key, where, text):
    if key not in table:
        raise ConfigError(f"missing required field '{where}{key}'", field=f"{where}{key}")
    return table[key]


def _number(value, name, text, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{name}' must be a number, got {value!r}", field=name,
                          line=_line_of(text, name.split(".")[-1]))
    if kind is int and int(value) != value:
        raise ConfigError(f"field '{name}' must be an integer, got {value!r}", field=name,
                          line=_line_of(text, name.split(".")[-1]))
    return kind(value)


def _build(cls, table, section, text, rename=None):
    rename = rename or {}
    known = {f.name for f in dc_fields(cls) if f.init}
    kwargs = {}
    for key, value in table.items():
        name = rename.get(key, key)
        if name not in known:
            raise ConfigError(f"unknown field '{section}.{key}'", field=f"{section}.{key}", line=_line_of(text, key))
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}", field=section, line=_line_of(text, f"[{section}]".strip("[]"))) from exc


def parse_config(data, text=None):
    """Validate a decoded TOML mapping; ``text`` is used for line numbers."""
    g = _number(_require(data, "gravity", "", text), "gravity", text)
    sigma = _number(_require(data, "surface_tension", "", text), "surface_tension", text)
    p0 = _number(_require(data, "mass_flux_p0", "", text), "mass_flux_p0", text)
    P0 = _number(data.get("atmospheric_pressure", 0.0), "atmospheric_pressure", text)
    try:
        physical = PhysicalParams(g=g, sigma=sigma, p0=p0, P0=P0)
    except ValueError as exc:
        name = "surface_tension" if "tension" in str(exc) else "mass_flux_p0" if "p0" in str(exc) else "gravity"
        raise ConfigError(str(exc), field=name, line=_line_of(text, name)) from exc

    vort = _require(data, "vorticity", "", text)
    if not isinstance(vort, dict):
        raise ConfigError("'vorticity' must be a table", field="vorticity", line=_line_of(text, "vorticity"))
    kind = _require(vort, "type", "vorticity.", text)
    breakpoints = _require(vort, "breakpoints", "vorticity.", text)
    values = _require(vort, "values", "vorticity.", text)
    try:
        vorticity = VorticitySpec(kind, breakpoints, values)
    except ValueError as exc:
        raise ConfigError(f"vorticity: {exc}", field="vorticity", line=_line_of(text, "breakpoints")) from exc
    if abs(vorticity.p0 - p0) > 1e-14 * abs(p0):
        raise ConfigError(f"vorticity.breakpoints[0]={vorticity.p0} must equal mass_flux_p0={p0}",
                          field="vorticity.breakpoints", line=_line_of(text, "breakpoints"))

    grid = _build(TensorGrid, data.get("grid", {}), "grid", text, rename={"np": "n_p"})
    solver = _build(SolverConfig, data.get("solver", {}), "solver", text)
    out = dict(data.get("output", {}))
    if "formats" in out:
        out["formats"] = tuple(out["formats"])
    output = _build(OutputConfig, out, "output", text)

    bif = data.get("bifurcation", {})
    n = bif.get("n")
    if n is not None:
        n = _number(n, "bifurcation.n", text, int)
        if n < 1:
            raise ConfigError("bifurcation.n must be >= 1", field="bifurcation.n", line=_line_of(text, "n"))
    ks = bif.get("k", [1])
    ks = tuple(_number(k, "bifurcation.k", text, int) for k in (ks if isinstance(ks, list) else [ks]))
    if any(k < 1 for k in ks):
        raise ConfigError("bifurcation.k entries must be >= 1", field="bifurcation.k", line=_line_of(text, "k"))
    steps = bif.get("steps")
    lambdas = tuple(_number(x, "laminar.lambdas", text) for x in data.get("laminar", {}).get("lambdas", []))
    return RunConfig(physical=physical, vorticity=vorticity, grid=grid, solver=solver, output=output,
                     n=n, k=ks, lambdas=lambdas,
                     dispersion_steps=None if steps is None else _number(steps, "bifurcation.steps", text, int))


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    text = raw.decode("utf-8", errors="replace")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"{path}: {exc}", line=int(m.group(1)) if m else None) from exc
    return parse_config(data, text)
