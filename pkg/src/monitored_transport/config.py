"""Scenario configuration: schema validation and junction (de)serialization.

A config is a TOML document::

    [junction]
    n_sites = 1
    h = [[0.0, 0.0]]          # row-major entries, each [re, im] (or a bare real)
    O = [[1.0, 0.0]]
    gamma = 1.0

    [junction.left]           # same layout for [junction.right]
    mu = 0.0
    T = 0.0
    coupling = [[0, 1.0]]     # (site, weight) pairs
    [junction.left.hybridization]
    kind = "lorentzian"       # or "flat" (gamma0, half_width, wide_band)
    t_c = 1.0                 # or "tabulated" (grid, values)
    delta = 0.55
    eps_f = -1.48

    [task]
    kind = "sweep"            # currents | sweep | conductance-scan | power-curve
                              # | cooling-map | cop-curve | oracle-check
    ...                       # task parameters, see TASK_FIELDS

    [quadrature]              # optional
    rel_tol = 1e-10

    [output]                  # optional
    path = "result.csv"
    json = false

Grids are given as ``{values = [...]}``, ``{linspace = [a, b, n]}`` or
``{geomspace = [a, b, n]}`` and must be strictly increasing.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigurationError
from .model import FlatBand, Junction, LorentzianFilter, Reservoir, Tabulated, validate
from .numerics import QuadratureSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TASKS = (
    "currents", "sweep", "conductance-scan", "power-curve", "cooling-map", "cop-curve", "oracle-check",
)

# required / optional task parameters
TASK_FIELDS = {
    "currents": ((), ()),
    "sweep": (("axes",), ()),
    "conductance-scan": (("mu", "gammas"), ("step",)),
    "power-curve": (("dmu", "gammas"), ("mu",)),
    "cooling-map": (("eps_left", "eps_right", "gammas"), ()),
    "cop-curve": (("gammas",), ("T_left",)),
    "oracle-check": (("gammas", "modes"), ("band", "kappa")),
}

HYBRIDIZATIONS = {
    "lorentzian": (("t_c", "delta"), ("eps_f",)),
    "flat": (("gamma0",), ("half_width", "wide_band")),
    "tabulated": (("grid", "values"), ()),
}


def _need(table: dict, key: str, where: str):
    if not isinstance(table, dict):
        raise ConfigurationError(f"'{where}' must be a table")
    if key not in table:
        raise ConfigurationError(f"missing field '{where}.{key}'" if where else f"missing field '{key}'")
    return table[key]


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigurationError(f"field '{where}' must be a number, got {x!r}")
    return float(x)


def _complex_entries(raw, n, where):
    if not isinstance(raw, list) or len(raw) != n * n:
        raise ConfigurationError(f"field '{where}' needs {n * n} row-major entries")
    out = np.empty(n * n, dtype=complex)
    for k, e in enumerate(raw):
        if isinstance(e, list):
            if len(e) != 2:
                raise ConfigurationError(f"entry {k} of '{where}' must be [re, im]")
            out[k] = complex(_number(e[0], f"{where}[{k}]"), _number(e[1], f"{where}[{k}]"))
        else:
            out[k] = _number(e, f"{where}[{k}]")
    return out.reshape(n, n)


def _hybridization(table, where):
    kind = _need(table, "kind", where)
    if kind not in HYBRIDIZATIONS:
        raise ConfigurationError(f"field '{where}.kind' must be one of {sorted(HYBRIDIZATIONS)}, got {kind!r}")
    req, opt = HYBRIDIZATIONS[kind]
    unknown = set(table) - set(req) - set(opt) - {"kind"}
    if unknown:
        raise ConfigurationError(f"unknown fields in '{where}': {sorted(unknown)}")
    for k in req:
        _need(table, k, where)
    if kind == "lorentzian":
        return LorentzianFilter(
            _number(table["t_c"], f"{where}.t_c"),
            _number(table["delta"], f"{where}.delta"),
            _number(table.get("eps_f", 0.0), f"{where}.eps_f"),
        )
    if kind == "flat":
        return FlatBand(
            _number(table["gamma0"], f"{where}.gamma0"),
            _number(table.get("half_width", 1.0), f"{where}.half_width"),
            bool(table.get("wide_band", False)),
        )
    return Tabulated(tuple(table["grid"]), tuple(table["values"]))


def _reservoir(table, where):
    hyb = _hybridization(_need(table, "hybridization", where), f"{where}.hybridization")
    coupling = table.get("coupling", [[0, 1.0]])
    try:
        coupling = tuple(
            (int(s), complex(*w) if isinstance(w, list) else complex(w)) for s, w in coupling
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"field '{where}.coupling' must be a list of [site, weight] pairs") from exc
    return Reservoir(
        hyb,
        mu=_number(table.get("mu", 0.0), f"{where}.mu"),
        T=_number(table.get("T", 0.0), f"{where}.T"),
        coupling=coupling,
    )


def junction_from_dict(table: dict) -> Junction:
    """Build and validate a junction from its config table."""
    n = _need(table, "n_sites", "junction")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigurationError("field 'junction.n_sites' must be a positive integer")
    h = _complex_entries(_need(table, "h", "junction"), n, "junction.h")
    O = _complex_entries(_need(table, "O", "junction"), n, "junction.O")
    gamma = _number(_need(table, "gamma", "junction"), "junction.gamma")
    try:
        left = _reservoir(_need(table, "left", "junction"), "junction.left")
        right = _reservoir(_need(table, "right", "junction"), "junction.right")
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    j = Junction(h=h, O=O, left=left, right=right, gamma=gamma)
    report = validate(j)
    if not report.ok:
        raise ConfigurationError(f"invalid junction: {report}")
    return j


def _hyb_to_dict(hyb):
    if isinstance(hyb, LorentzianFilter):
        return {"kind": "lorentzian", "t_c": hyb.t_c, "delta": hyb.delta, "eps_f": hyb.eps_f}
    if isinstance(hyb, FlatBand):
        return {"kind": "flat", "gamma0": hyb.gamma0, "half_width": hyb.half_width, "wide_band": hyb.wide_band}
    return {"kind": "tabulated", "grid": list(hyb.grid), "values": list(hyb.values)}


def _weight(w):
    return w.real if w.imag == 0 else [w.real, w.imag]


def junction_to_dict(j: Junction) -> dict:
    def entries(m):
        return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]

    def res(r):
        return {
            "mu": r.mu, "T": r.T,
            "coupling": [[i, _weight(w)] for i, w in r.coupling],
            "hybridization": _hyb_to_dict(r.hybridization),
        }

    return {
        "n_sites": j.n_sites, "h": entries(j.h), "O": entries(j.O), "gamma": j.gamma,
        "left": res(j.left), "right": res(j.right),
    }


def grid_from(spec, where) -> np.ndarray:
    if isinstance(spec, list):
        spec = {"values": spec}
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigurationError(f"field '{where}' must be one of values/linspace/geomspace")
    (kind, arg), = spec.items()
    if kind == "values":
        g = np.array([_number(x, where) for x in arg], dtype=float)
    elif kind in ("linspace", "geomspace"):
        if not isinstance(arg, list) or len(arg) != 3:
            raise ConfigurationError(f"field '{where}.{kind}' needs [start, stop, count]")
        a, b = _number(arg[0], where), _number(arg[1], where)
        cnt = arg[2]
        if isinstance(cnt, bool) or not isinstance(cnt, int) or cnt < 0:
            raise ConfigurationError(f"count in '{where}.{kind}' must be a non-negative integer")
        if kind == "geomspace" and (a <= 0 or b <= 0):
            raise ConfigurationError(f"field '{where}.geomspace' needs positive endpoints")
        g = np.linspace(a, b, cnt) if kind == "linspace" else np.geomspace(a, b, cnt)
    else:
        raise ConfigurationError(f"field '{where}' has unknown grid kind {kind!r}")
    if g.size == 0:
        raise ConfigurationError(f"empty grid in '{where}'")
    if np.any(np.diff(g) <= 0):
        raise ConfigurationError(f"grid '{where}' must be strictly increasing")
    return g


# --- sweep parameter paths -------------------------------------------------


def set_param(jtable: dict, path: str, value: float) -> dict:
    """Copy of a junction table with one dotted parameter replaced.

    ``h.i.j`` / ``O.i.j`` set a real matrix element and its Hermitian partner;
    anything else walks nested tables, e.g. ``left.hybridization.eps_f``.
    """
    out = copy.deepcopy(jtable)
    parts = path.split(".")
    if parts[0] in ("h", "O") and len(parts) == 3:
        n = out["n_sites"]
        try:
            i, k = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigurationError(f"bad matrix index in parameter '{path}'") from exc
        if not (0 <= i < n and 0 <= k < n):
            raise ConfigurationError(f"matrix index out of range in parameter '{path}'")
        entries = out[parts[0]]
        entries[i * n + k] = [float(value), 0.0]
        entries[k * n + i] = [float(value), 0.0]
        return out
    node = out
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigurationError(f"unknown parameter path '{path}'")
        node = node[p]
    optional = ("mu", "T", "eps_f", "half_width")
    if not isinstance(node, dict) or (parts[-1] not in node and parts[-1] not in optional):
        raise ConfigurationError(f"unknown parameter path '{path}'")
    node[parts[-1]] = float(value)
    return out


@dataclass(frozen=True)
class Axis:
    params: tuple
    grid: np.ndarray

    @property
    def label(self):
        return "+".join(self.params)


def _axes(raw, where):
    if not isinstance(raw, list) or not 1 <= len(raw) <= 2:
        raise ConfigurationError(f"field '{where}' must list one or two axes")
    axes = []
    for k, ax in enumerate(raw):
        w = f"{where}[{k}]"
        params = ax.get("params", ax.get("param")) if isinstance(ax, dict) else None
        if params is None:
            raise ConfigurationError(f"missing field '{w}.param'")
        if isinstance(params, str):
            params = [params]
        grid_spec = {k2: v for k2, v in ax.items() if k2 not in ("param", "params")}
        axes.append(Axis(tuple(params), grid_from(grid_spec, w)))
    return axes


@dataclass(frozen=True)
class ScenarioConfig:
    raw: dict
    junction_table: dict
    junction: Junction
    task: str
    params: dict
    quadrature: QuadratureSpec
    output_path: Any
    json_mirror: bool
    digest: str

    def junction_with(self, assignments) -> Junction:
        table = self.junction_table
        for path, value in assignments:
            table = set_param(table, path, value)
        return junction_from_dict(table)


def config_digest(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"TOML syntax error: {exc}") from exc


def load_config(raw: dict, rel_tol: float | None = None) -> ScenarioConfig:
    """Validate a parsed config and resolve every task parameter."""
    raw = copy.deepcopy(raw)
    if rel_tol is not None:
        raw.setdefault("quadrature", {})["rel_tol"] = float(rel_tol)
    unknown = set(raw) - {"junction", "task", "quadrature", "output", "name", "description"}
    if unknown:
        raise ConfigurationError(f"unknown top-level sections: {sorted(unknown)}")
    jtable = _need(raw, "junction", "")
    junction = junction_from_dict(jtable)
    task_t = _need(raw, "task", "")
    kind = _need(task_t, "kind", "task")
    if kind not in TASKS:
        raise ConfigurationError(f"field 'task.kind' must be one of {list(TASKS)}, got {kind!r}")
    req, opt = TASK_FIELDS[kind]
    extra = set(task_t) - set(req) - set(opt) - {"kind"}
    if extra:
        raise ConfigurationError(f"unknown fields in 'task' for {kind}: {sorted(extra)}")
    params = {}
    for key in req:
        _need(task_t, key, "task")
    for key in req + opt:
        if key not in task_t:
            continue
        val = task_t[key]
        if key == "axes":
            params[key] = _axes(val, "task.axes")
            for ax in params[key]:
                for p in ax.params:
                    set_param(jtable, p, float(ax.grid[0]))
        elif key in ("step", "kappa") or (key == "mu" and kind == "power-curve"):
            params[key] = _number(val, f"task.{key}")
        elif key == "band":
            if not isinstance(val, list) or len(val) != 2:
                raise ConfigurationError("field 'task.band' must be [lo, hi]")
            params[key] = (_number(val[0], "task.band"), _number(val[1], "task.band"))
        elif key == "modes":
            if not isinstance(val, list) or not val or not all(isinstance(m, int) and m >= 2 for m in val):
                raise ConfigurationError("field 'task.modes' must list integers >= 2")
            params[key] = sorted(val)
        else:
            params[key] = grid_from(val, f"task.{key}")
    if kind in ("cooling-map", "cop-curve") and junction.n_sites != 2:
        raise ConfigurationError(f"task {kind} needs a two-site junction")
    q = raw.get("quadrature", {})
    bad = set(q) - {"rel_tol", "abs_tol", "max_subdivisions"}
    if bad:
        raise ConfigurationError(f"unknown fields in 'quadrature': {sorted(bad)}")
    try:
        qspec = QuadratureSpec(**q)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid quadrature settings: {exc}") from exc
    out = raw.get("output", {})
    return ScenarioConfig(
        raw=raw, junction_table=jtable, junction=junction, task=kind, params=params,
        quadrature=qspec, output_path=out.get("path"), json_mirror=bool(out.get("json", False)),
        digest=config_digest(raw),
    )
