"""Command line entry point: ``monitored-transport run <config>``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure (also
returned when some sweep points failed; their rows carry an ``error``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, load_config, parse_toml
from .currents import (
    aligned_two_site,
    cop_value,
    differential_conductance,
    power_curve,
    stopping_voltage,
    transport,
)
from .errors import ConfigurationError, InvalidParameterError, MonitoredTransportError
from .oracle import oracle_transport

log = logging.getLogger("monitored_transport")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

UNITS = {
    "gamma": "t", "mu": "t", "dmu": "t", "dmu_stop": "t", "eps_left": "t", "eps_right": "t",
    "T_left": "t", "G": "1", "P": "t^2", "P_linear": "t^2", "COP": "1", "cooling": "1",
    "W_meas": "t^2", "D_residual": "1", "quad_error": "1", "modes": "1",
    "rel_error": "1", "mismatch": "1", "balance": "t", "error": "text",
}


def _unit(col):
    if col in UNITS:
        return UNITS[col]
    if col.startswith("J0"):
        return "t"
    if col.startswith("J1") or col.startswith("JE"):
        return "t^2"
    if col.startswith("n_"):
        return "1"
    return "t"


# --- tasks -----------------------------------------------------------------
# Each task expands into ordered points; evaluating a point yields rows.


def _points(cfg: ScenarioConfig):
    p = cfg.params
    if cfg.task == "currents":
        return [{}]
    if cfg.task == "sweep":
        axes = p["axes"]
        if len(axes) == 1:
            return [{axes[0].label: float(v)} for v in axes[0].grid]
        return [{axes[0].label: float(a), axes[1].label: float(b)} for a in axes[0].grid for b in axes[1].grid]
    if cfg.task == "conductance-scan":
        return [{"gamma": float(g), "mu": float(m)} for g in p["gammas"] for m in p["mu"]]
    if cfg.task == "power-curve":
        return [{"gamma": float(g)} for g in p["gammas"]]
    if cfg.task == "cooling-map":
        return [{"gamma": float(g), "eps_left": float(e)} for g in p["gammas"] for e in p["eps_left"]]
    if cfg.task == "cop-curve":
        tl = p.get("T_left", [cfg.junction.left.T])
        return [{"T_left": float(t), "gamma": float(g)} for t in tl for g in p["gammas"]]
    if cfg.task == "oracle-check":
        return [{"gamma": float(g), "modes": int(m)} for g in p["gammas"] for m in p["modes"]]
    raise ConfigurationError(f"unknown task {cfg.task}")


def _transport_row(res):
    row = {}
    for i, r in enumerate("LR"):
        for z in (0, 1):
            row[f"J{z}_{r}"] = float(res.total[i, z])
            row[f"J{z}_{r}_elastic"] = float(res.elastic[i, z])
            row[f"J{z}_{r}_inelastic"] = float(res.inelastic[i, z])
    row["W_meas"] = float(res.measurement_work)
    for k, occ in enumerate(np.real(np.diag(res.D))):
        row[f"n_{k}"] = float(occ)
    row["D_residual"] = res.D_residual
    row["quad_error"] = res.quad_error
    return row


def _evaluate(cfg: ScenarioConfig, point: dict):
    q = cfg.quadrature
    p = cfg.params
    j = cfg.junction
    if cfg.task == "currents":
        return [_transport_row(transport(j, q))]
    if cfg.task == "sweep":
        assign = []
        for ax in p["axes"]:
            assign.extend((name, point[ax.label]) for name in ax.params)
        return [dict(point, **_transport_row(transport(cfg.junction_with(assign), q)))]
    if cfg.task == "conductance-scan":
        G = differential_conductance(j.replace(gamma=point["gamma"]), point["mu"], step=p.get("step", 1e-4), spec=q)
        return [dict(point, G=G)]
    if cfg.task == "power-curve":
        jg = j.replace(gamma=point["gamma"])
        mu = p.get("mu", 0.5 * (j.left.mu + j.right.mu))
        G = differential_conductance(jg, mu, spec=q)
        try:
            stop = stopping_voltage(jg, q, mu=mu)
        except MonitoredTransportError:
            stop = float("nan")
        rows = []
        for pt in power_curve(jg, p["dmu"], q, mu=mu, conductance=G):
            rows.append(dict(point, dmu=pt.dmu, J0_R=pt.current, P=pt.power, P_linear=pt.power_linear,
                             G=G, dmu_stop=stop))
        return rows
    if cfg.task == "cooling-map":
        rows = []
        for er in p["eps_right"]:
            jj = aligned_two_site(j, point["eps_left"], float(er), point["gamma"])
            jr = transport(jj, q).current("R", 1)
            rows.append(dict(point, eps_right=float(er), J1_R=jr, cooling=int(jr < 0)))
        return rows
    if cfg.task == "cop-curve":
        jj = j.with_temperatures(point["T_left"], j.right.T).replace(gamma=point["gamma"])
        res = transport(jj, q)
        jr, jl = res.current("R", 1), res.current("L", 1)
        return [dict(point, J1_R=jr, J1_L=jl, COP=cop_value(jr, jl))]
    if cfg.task == "oracle-check":
        jg = j.replace(gamma=point["gamma"])
        oc, _ = oracle_transport(jg, point["modes"], band=p.get("band"), kappa=p.get("kappa"))
        ref = transport(jg, q).through_current
        val = oc.current(1, 0)
        return [dict(point, J0_R_oracle=val, J0_R=ref, rel_error=(val - ref) / ref if ref else float("nan"),
                     mismatch=oc.mismatch, balance=oc.particle_balance)]
    raise ConfigurationError(f"unknown task {cfg.task}")


def _safe_evaluate(args):
    cfg, point = args
    try:
        return _evaluate(cfg, point)
    except (MonitoredTransportError, np.linalg.LinAlgError, ValueError) as exc:
        return [dict(point, error=f"{type(exc).__name__}: {exc}")]


def _oracle_extrapolation(cfg, rows):
    """Append one Richardson row per gamma when the two largest M differ by 2x."""
    modes = cfg.params["modes"]
    if len(modes) < 2 or modes[-1] != 2 * modes[-2]:
        return rows
    out = list(rows)
    for g in cfg.params["gammas"]:
        sel = {r["modes"]: r for r in rows if r["gamma"] == float(g) and "error" not in r}
        if modes[-1] in sel and modes[-2] in sel:
            hi, lo = sel[modes[-1]], sel[modes[-2]]
            val = 2 * hi["J0_R_oracle"] - lo["J0_R_oracle"]
            ref = hi["J0_R"]
            out.append(dict(gamma=float(g), modes=-1, J0_R_oracle=val, J0_R=ref,
                            rel_error=(val - ref) / ref if ref else float("nan"),
                            mismatch=max(hi["mismatch"], lo["mismatch"]),
                            balance=max(hi["balance"], lo["balance"])))
    return out


# --- execution with resumable progress ---------------------------------------


def _sidecar(out_path: Path) -> Path:
    return out_path.with_name(out_path.name + ".progress.jsonl")


def _load_progress(path: Path, digest: str):
    done = {}
    if not path.exists():
        return done
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines or json.loads(lines[0]).get("digest") != digest:
        return {}
    for line in lines[1:]:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            break  # torn last line from an interrupted run
        done[rec["i"]] = rec["rows"]
    return done


def execute(cfg: ScenarioConfig, out_path: Path, workers: int = 1):
    """Evaluate every point (resuming from the sidecar) and return rows in grid order."""
    points = _points(cfg)
    side = _sidecar(out_path)
    done = _load_progress(side, cfg.digest)
    if done:
        log.info("resuming: %d of %d points already complete", len(done), len(points))
    todo = [i for i in range(len(points)) if i not in done]
    mode = "a" if done else "w"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with side.open(mode) as fh:
        if not done:
            fh.write(json.dumps({"digest": cfg.digest}) + "\n")
        args = [(cfg, points[i]) for i in todo]
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = pool.map(_safe_evaluate, args, chunksize=max(1, len(todo) // (8 * workers)))
                for i, rows in zip(todo, results):
                    done[i] = rows
                    fh.write(json.dumps({"i": i, "rows": rows}) + "\n")
                    fh.flush()
        else:
            for i, a in zip(todo, args):
                rows = _safe_evaluate(a)
                done[i] = rows
                fh.write(json.dumps({"i": i, "rows": rows}) + "\n")
                fh.flush()
    rows = [r for i in range(len(points)) for r in done[i]]
    if cfg.task == "oracle-check":
        rows = _oracle_extrapolation(cfg, rows)
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(cfg: ScenarioConfig, rows) -> str:
    columns = []
    for r in rows:
        for k in r:
            if k not in columns and k != "error":
                columns.append(k)
    columns.append("error")
    buf = io.StringIO()
    q = cfg.quadrature
    buf.write(f"# monitored-transport {__version__}\n")
    buf.write(f"# task: {cfg.task}\n")
    buf.write(f"# config_sha256: {cfg.digest}\n")
    buf.write(f"# quadrature: rel_tol={q.rel_tol!r} abs_tol={q.abs_tol!r} max_subdivisions={q.max_subdivisions}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"{c} [{_unit(c)}]" for c in columns])
    for r in rows:
        writer.writerow([_fmt(r.get(c, float("nan") if c != "error" else "")) for c in columns])
    return buf.getvalue()


def render_json(cfg: ScenarioConfig, rows) -> str:
    meta = {
        "version": __version__, "task": cfg.task, "config_sha256": cfg.digest,
        "quadrature": {"rel_tol": cfg.quadrature.rel_tol, "abs_tol": cfg.quadrature.abs_tol,
                       "max_subdivisions": cfg.quadrature.max_subdivisions},
    }
    return json.dumps({"metadata": meta, "rows": rows}, indent=1, allow_nan=True)


# --- entry point ---------------------------------------------------------------


def preset_names():
    root = resources.files("monitored_transport") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_text(name: str) -> str:
    path = resources.files("monitored_transport") / "presets" / f"{name}.toml"
    if not path.is_file():
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def _default_workers():
    raw = os.environ.get("MT_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser():
    ap = argparse.ArgumentParser(prog="monitored-transport", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config or preset")
    run.add_argument("config", nargs="?", help="TOML scenario file")
    run.add_argument("--preset", help="run a bundled preset instead of a file")
    run.add_argument("--out", help="CSV output path")
    run.add_argument("--workers", type=int, default=None, help="parallel worker processes (default $MT_WORKERS or 1)")
    run.add_argument("--rel-tol", type=float, default=None, help="override quadrature relative tolerance")
    run.add_argument("--json", action="store_true", help="also write a JSON mirror next to the CSV")
    run.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list bundled presets")
    return ap


def run(args) -> int:
    if (args.config is None) == (args.preset is None):
        log.error("give exactly one of a config path or --preset")
        return EXIT_INVALID
    try:
        if args.preset:
            text, stem = preset_text(args.preset), args.preset
        else:
            path = Path(args.config)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
            stem = path.stem
        cfg = load_config(parse_toml(text), rel_tol=args.rel_tol)
    except (ConfigurationError, InvalidParameterError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    out = Path(args.out or cfg.output_path or f"{stem}.csv")
    workers = args.workers if args.workers is not None else _default_workers()
    if workers < 1:
        log.error("--workers must be >= 1")
        return EXIT_INVALID
    try:
        rows = execute(cfg, out, workers)
    except (ConfigurationError, InvalidParameterError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    except MonitoredTransportError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    out.write_text(render_csv(cfg, rows))
    if args.json or cfg.json_mirror:
        out.with_suffix(".json").write_text(render_json(cfg, rows))
    _sidecar(out).unlink(missing_ok=True)
    failed = sum(1 for r in rows if r.get("error"))
    log.info("wrote %d rows to %s", len(rows), out)
    if failed:
        log.warning("%d rows failed; see the error column", failed)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
