"""Command-line front end.

    wgheat validate --config cfg.json
    wgheat steady   --config cfg.json --set temp1=10 --format json
    wgheat evolve   --config cfg.json --out traj.csv
    wgheat sweep    --config sweep.json --out table.csv --workers 4
    wgheat figure   fig2 --out fig2.csv

Exit status: 0 success, 1 fatal config/validation error, 2 solver error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .generator import DensityMatrix, DensityMatrixError, build_generator
from .model import CONFIG_FIELDS, ConfigError, SystemConfig, validate
from .solver import EvolveOptions, SolverError, evolve, steady_state
from .sweep import FIGURES, SweepError, SweepSpec, figure_preset, format_float, run_sweep
from .thermo import ThermoError, effective_temperature, engine_metrics, heat_currents

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def parse_overrides(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep:
            raise CliError(f"--set expects KEY=VALUE, got {item!r}", EXIT_CONFIG)
        if key not in CONFIG_FIELDS:
            raise CliError(f"--set: unknown config field {key!r}", EXIT_CONFIG)
        try:
            out[key] = float(value)
        except ValueError:
            raise CliError(f"--set {key}: not a number: {value!r}", EXIT_CONFIG) from None
    return out


def load_config(path, overrides) -> SystemConfig:
    if path is None:
        raise CliError("--config is required", EXIT_CONFIG)
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_CONFIG) from None
    if not isinstance(data, dict):
        raise CliError("config JSON must be an object", EXIT_CONFIG)
    unknown = set(data) - set(CONFIG_FIELDS)
    if unknown:
        raise CliError(f"unknown config fields: {sorted(unknown)}", EXIT_CONFIG)
    data.update(overrides)
    return SystemConfig.from_dict(data)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else format_float(v) for v in row])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def cmd_validate(args) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    report = validate(config)
    if args.format == "json":
        _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    else:
        lines = [f"status: {report.status}"]
        lines += [f"fatal: {m}" for m in report.fatal]
        lines += [f"warning: {m}" for m in report.warnings]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_CONFIG


def steady_summary(config: SystemConfig) -> dict:
    report = validate(config)
    report.raise_if_fatal()
    gen = build_generator(config)
    ss = steady_state(gen)
    currents = heat_currents(config, ss, gen)
    engine = engine_metrics(config, currents)
    try:
        t_eff = effective_temperature(config, ss)
    except ValueError:
        t_eff = math.nan
    rho = ss.rho.rho
    summary = {
        "config": config.to_dict(),
        "warnings": list(report.warnings),
        "method": ss.method,
        "residual": ss.residual,
        "singular_values": list(ss.singular_values),
        "populations": [float(rho[j, j].real) for j in range(4)],
        "rho42": [float(rho[3, 1].real), float(rho[3, 1].imag)],
        "rho43": [float(rho[3, 2].real), float(rho[3, 2].imag)],
        "rho32": [float(rho[2, 1].real), float(rho[2, 1].imag)],
        "currents": currents.as_dict(),
        "engine": engine.as_dict(),
        "T_eff": t_eff,
    }
    T1, T2 = config.temperature
    summary["sigma"] = currents.entropy_production(config) if T1 > 0 and T2 > 0 else math.nan
    return summary


def _flatten(summary: dict) -> dict[str, float]:
    flat = {"method": summary["method"], "residual": summary["residual"]}
    for j, p in enumerate(summary["populations"], 1):
        flat[f"rho{j}{j}"] = p
    for key in ("rho42", "rho43", "rho32"):
        flat[f"re_{key}"], flat[f"im_{key}"] = summary[key]
    flat.update(summary["currents"])
    flat.update(summary["engine"])
    flat["T_eff"] = summary["T_eff"]
    flat["sigma"] = summary["sigma"]
    return flat


def cmd_steady(args) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    if args.dump_config:
        Path(args.dump_config).write_text(config.to_json() + "\n", encoding="utf-8")
    summary = steady_summary(config)
    if args.format == "json":
        _emit(json.dumps(_json_safe(summary), indent=2) + "\n", args.out)
    else:
        flat = _flatten(summary)
        _emit(_table_csv(list(flat), [list(flat.values())]), args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    validate(config).raise_if_fatal()
    gen = build_generator(config)
    opts = EvolveOptions(t_final=args.t_final, samples=args.points or 200)
    traj = evolve(gen, DensityMatrix.ground(), opts)
    header = ["t", "rho11", "rho22", "rho33", "rho44",
              "re_rho42", "im_rho42", "re_rho43", "im_rho43", "re_rho32", "im_rho32",
              "J_W1", "J_W2", "J_L1", "J_L2"]
    rows = []
    for t, rho in zip(traj.times, traj.states):
        c = heat_currents(config, rho, gen)
        rows.append([t, *(rho[j, j].real for j in range(4)),
                     rho[3, 1].real, rho[3, 1].imag, rho[3, 2].real, rho[3, 2].imag,
                     rho[2, 1].real, rho[2, 1].imag, c.J_W1, c.J_W2, c.J_L1, c.J_L2])
    if args.format == "json":
        payload = {"config": config.to_dict(), "step": traj.step, "rate_norm": traj.rate_norm,
                   "columns": header, "rows": [[float(v) for v in r] for r in rows]}
        _emit(json.dumps(payload) + "\n", args.out)
    else:
        _emit(_table_csv(header, rows), args.out)
    return EXIT_OK


def _write_sweep(result, args, default_out=None):
    text = result.to_json() + "\n" if args.format == "json" else result.to_csv()
    _emit(text, args.out or default_out)
    failed = len(result.failed)
    if failed:
        print(f"{failed} of {len(result.rows)} points failed", file=sys.stderr)


def cmd_sweep(args) -> int:
    if args.config is None:
        raise CliError("--config (sweep spec JSON) is required", EXIT_CONFIG)
    try:
        data = json.loads(Path(args.config).read_text())
        overrides = parse_overrides(args.set)
        data["base"] = {**data.get("base", {}), **overrides}
        spec = SweepSpec.from_dict(data)
        if args.points:
            spec = spec.with_points(args.points)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliError(f"invalid sweep spec {args.config}: {exc}", EXIT_CONFIG) from None
    _write_sweep(run_sweep(spec, workers=args.workers), args)
    return EXIT_OK


def cmd_figure(args) -> int:
    spec = figure_preset(args.name)
    if args.points:
        spec = spec.with_points(args.points)
    ext = "json" if args.format == "json" else "csv"
    _write_sweep(run_sweep(spec, workers=args.workers), args, f"{args.name}.{ext}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field (repeatable)")
    common.add_argument("--points", type=int, metavar="N")
    common.add_argument("--workers", type=int, default=1, metavar="N")

    p = argparse.ArgumentParser(prog="wgheat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a config")
    s.set_defaults(func=cmd_validate)
    s = sub.add_parser("steady", parents=[common], help="steady state and all observables")
    s.add_argument("--dump-config", metavar="PATH", help="write the resolved config JSON")
    s.set_defaults(func=cmd_steady)
    s = sub.add_parser("evolve", parents=[common], help="trajectory from the ground state")
    s.add_argument("--t-final", type=float)
    s.set_defaults(func=cmd_evolve)
    s = sub.add_parser("sweep", parents=[common], help="run a sweep spec file")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("figure", parents=[common], help="run a figure preset")
    s.add_argument("name", choices=FIGURES)
    s.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.points is not None and args.points < 1:
            raise CliError("--points must be >= 1", EXIT_CONFIG)
        if args.workers < 1:
            raise CliError("--workers must be >= 1", EXIT_CONFIG)
        return args.func(args)
    except CliError as exc:
        return _fail(args, str(exc), exc.code, "usage")
    except ConfigError as exc:
        return _fail(args, str(exc), EXIT_CONFIG, "config")
    except (SolverError, ThermoError, SweepError, DensityMatrixError) as exc:
        return _fail(args, str(exc), EXIT_SOLVER, "solver")


def _fail(args, message: str, code: int, kind: str) -> int:
    if getattr(args, "format", None) == "json":
        print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    else:
        print(f"error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
