"""JSON snapshots of wave states and small CSV/JSON writers.

Floats are written with ``repr`` (shortest round-trip form), so a state
written and read back is bit-identical.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import SnapshotError
from .grid import TensorGrid
from .operators import WaveState
from .params import PhysicalParams, VorticitySpec

FORMAT = "rotwaves-state"
VERSION = 1

__all__ = ["state_to_dict", "state_from_dict", "save_state", "load_state", "write_csv", "write_json"]


def state_to_dict(state, params, spec, **extra):
    return {
        "format": FORMAT,
        "version": VERSION,
        "lambda": float(state.lam),
        "Q": float(state.Q),
        "k": int(state.k),
        "n": int(state.n),
        "grid": state.grid.to_dict(),
        "physical": {"gravity": params.g, "surface_tension": params.sigma,
                     "mass_flux_p0": params.p0, "atmospheric_pressure": params.P0},
        "vorticity": spec.to_dict(),
        "modes": state.modes.tolist(),
        "coefficients": state.coeffs.tolist(),
        **extra,
    }


def state_from_dict(data):
    try:
        if data.get("format") != FORMAT:
            raise SnapshotError(f"not a state snapshot (format={data.get('format')!r})")
        grid = TensorGrid(**data["grid"])
        phys = data["physical"]
        params = PhysicalParams(g=phys["gravity"], sigma=phys["surface_tension"], p0=phys["mass_flux_p0"],
                                P0=phys.get("atmospheric_pressure", 0.0))
        v = data["vorticity"]
        spec = VorticitySpec(v["type"], v["breakpoints"], v["values"])
        coeffs = np.array(data["coefficients"], dtype=float)
        state = WaveState(lam=float(data["lambda"]), coeffs=coeffs, k=int(data["k"]), n=int(data["n"]),
                          Q=float(data["Q"]), grid=grid)
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot: {exc!r}") from exc
    if coeffs.ndim != 2 or coeffs.shape[1] != state.modes.size:
        raise SnapshotError(f"coefficient array shape {coeffs.shape} inconsistent with grid")
    return state, params, spec


def save_state(path, state, params, spec, **extra):
    path = Path(path)
    path.write_text(json.dumps(state_to_dict(state, params, spec, **extra), indent=1))
    return path


def load_state(path):
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8", errors="replace")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise SnapshotError(f"{path}: invalid JSON at byte {offset}: {exc.msg}", offset=offset) from exc
    if not isinstance(data, dict):
        raise SnapshotError(f"{path}: top level must be an object", offset=0)
    return state_from_dict(data)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, payload):
    Path(path).write_text(json.dumps(_clean(payload), indent=2))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
