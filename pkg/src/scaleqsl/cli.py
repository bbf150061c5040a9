"""
Command-line interface.

    scaleqsl simulate --system '{"kind":"custom","sigma2":1}' --protocol sta --omega-f 0.0625 --tau 10
    scaleqsl sweep --protocol linear --axis tau --values 5,10,20,50
    scaleqsl sweep --closed-form tqd --axis x --from 0.05 --to 1 --sigma2 0.5,1,2
    scaleqsl ingest data.csv --system '{"kind":"tonks_girardeau","n":5}'
    scaleqsl catalog

Times and frequencies are in natural units (omega0 = 1) unless
``--omega0-hz`` is given, in which case ``--tau`` is in seconds and
``--omega-f`` in Hz. Exit codes: 0 ok, 2 usage/configuration, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import CATALOG, ConfigError, NumericalError, QslError, UnitSystem, system_from_dict
from .ermakov import DEFAULT_ATOL, DEFAULT_NODES, DEFAULT_RTOL
from .experiment import (
    DATA_TARGETS,
    SolverSettings,
    metrics_from_data,
    propagate_uncertainty,
    run_protocol,
    sweep,
    tqd_sweep,
)
from .protocols import protocol_from_dict, tabulated_protocol
from .serialization import (
    dumps,
    fmt,
    read_measured_csv,
    read_protocol_csv,
    write_json,
    write_report_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from .ermakov import Trajectory

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

PROTOCOL_KINDS = ("constant", "linear", "sta", "tqd", "tof", "tabulated")

# Isotropic version of a reported unitary-gas expansion: 1200 Hz -> 300 Hz in 800 us.
PRESETS = {
    "unitary-fermi-expansion": {"omega0_hz": 1200.0, "omega_f": 300.0, "tau": 800e-6},
}


@dataclass
class RunConfig:
    """Everything a run depends on; round-trips through JSON."""

    system: dict = field(default_factory=lambda: {"kind": "custom", "sigma2": 1.0})
    protocol: dict = field(default_factory=lambda: {"kind": "linear", "omega_f": 0.0625, "tau": 10.0})
    units: dict = field(default_factory=dict)
    solver: dict = field(
        default_factory=lambda: {"num_nodes": DEFAULT_NODES, "rel_tol": DEFAULT_RTOL, "abs_tol": DEFAULT_ATOL}
    )
    output: dict = field(default_factory=lambda: {"dir": None, "format": "csv"})

    _SECTIONS = {
        "protocol": {"kind", "omega_f", "tau", "file"},
        "units": {"omega0_hz"},
        "solver": {"num_nodes", "rel_tol", "abs_tol"},
        "output": {"dir", "format"},
    }

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"system", "protocol", "units", "solver", "output"}
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        cfg = cls()
        for name, allowed in cls._SECTIONS.items():
            section = data.get(name, {})
            if not isinstance(section, dict):
                raise ConfigError(f"config section {name!r} must be an object")
            extra = set(section) - allowed
            if extra:
                raise ConfigError(f"unknown field(s) {sorted(extra)} in config section {name!r}")
            getattr(cfg, name).update(section)
        if "system" in data:
            system_from_dict(data["system"])
            cfg.system = dict(data["system"])
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def settings(self) -> SolverSettings:
        s = self.solver
        try:
            return SolverSettings(int(s["num_nodes"]), float(s["rel_tol"]), float(s["abs_tol"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid solver settings: {exc}") from None


def _parse_json_arg(text, what):
    p = Path(text)
    try:
        if not text.lstrip().startswith("{") and p.is_file():
            text = p.read_text(encoding="utf-8")
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from None


def _resolve_config(args) -> RunConfig:
    """Flags override the config file, which overrides defaults."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        cfg = RunConfig.from_dict(raw)
    if getattr(args, "preset", None):
        pre = PRESETS[args.preset]
        cfg.units["omega0_hz"] = pre["omega0_hz"]
        cfg.protocol.update(omega_f=pre["omega_f"], tau=pre["tau"])
    if args.system is not None:
        cfg.system = _parse_json_arg(args.system, "--system")
    system_from_dict(cfg.system)
    for flag, key in (("protocol", "kind"), ("omega_f", "omega_f"), ("tau", "tau"), ("protocol_file", "file")):
        val = getattr(args, flag, None)
        if val is not None:
            cfg.protocol[key] = val
    if getattr(args, "omega0_hz", None) is not None:
        cfg.units["omega0_hz"] = args.omega0_hz
    for flag, key in (("nodes", "num_nodes"), ("rtol", "rel_tol"), ("atol", "abs_tol")):
        val = getattr(args, flag, None)
        if val is not None:
            cfg.solver[key] = val
    if getattr(args, "out", None) is not None:
        cfg.output["dir"] = args.out
    if getattr(args, "format", None) is not None:
        cfg.output["format"] = args.format
    if cfg.output.get("format") not in ("csv", "json"):
        raise ConfigError("output format must be 'csv' or 'json'")
    return cfg


def _units(cfg) -> UnitSystem | None:
    f0 = cfg.units.get("omega0_hz")
    return UnitSystem.from_hz(float(f0)) if f0 is not None else None


def _build_protocol(cfg: RunConfig, **override):
    p = {**cfg.protocol, **override}
    kind = p.get("kind")
    if kind not in PROTOCOL_KINDS:
        raise ConfigError(f"unknown protocol {kind!r}; expected one of {PROTOCOL_KINDS}")
    units = _units(cfg)
    if kind == "tabulated":
        if not p.get("file"):
            raise ConfigError("tabulated protocol needs --protocol-file")
        samples = read_protocol_csv(p["file"])
        if units is not None:
            samples = np.column_stack(
                [units.time_to_natural(samples[:, 0]), samples[:, 1] / units.omega0**2]
            )
        return tabulated_protocol(samples, omega0=1.0)
    for key in ("tau",) + (("omega_f",) if kind in ("linear", "sta", "tqd") else ()):
        if p.get(key) is None:
            raise ConfigError(f"protocol {kind!r} requires --{key.replace('_', '-')}")
    tau = float(p["tau"])
    omega_f = float(p.get("omega_f", 1.0) if kind not in ("constant", "tof") else 1.0)
    if units is not None:
        tau = units.time_to_natural(tau)
        if kind in ("linear", "sta", "tqd"):
            omega_f = units.hz_to_natural(float(p["omega_f"]))
    if kind == "tof":
        omega_f = 0.0
    return protocol_from_dict({"kind": kind, "omega0": 1.0, "omega_f": omega_f, "tau": tau})


def _out_dir(cfg) -> Path:
    d = cfg.output.get("dir") or os.environ.get("QSL_OUT_DIR") or "qsl_out"
    return Path(d)


def _unit_summary(cfg, summary):
    units = _units(cfg)
    if units is None:
        return summary
    summary = dict(summary)
    summary["units"] = {
        "omega0_rad_per_s": units.omega0,
        "tau_s": units.time_from_natural(summary["tau"]),
        "tau_qsl_s": units.time_from_natural(summary["tau_qsl"]),
    }
    return summary


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    spec = system_from_dict(cfg.system)
    protocol = _build_protocol(cfg)
    report = run_protocol(spec, protocol, cfg.settings())
    out = _out_dir(cfg)
    summary = _unit_summary(cfg, report.summary())
    summary["system"] = spec.to_dict()
    summary["protocol"] = protocol.to_dict() if protocol.kind != "tabulated" else {"kind": "tabulated"}
    if cfg.output["format"] == "csv":
        traj = Trajectory(report.t, report.b, report.bdot, report.omega_sq)
        write_trajectory_csv(out / "trajectory.csv", traj)
        write_report_csv(out / "report.csv", report)
    else:
        write_json(
            out / "report.json",
            {
                "t": report.t,
                "b": report.b,
                "bdot": report.bdot,
                "omega_sq": report.omega_sq,
                "F": report.fidelity,
                "logF": report.log_fidelity,
                "bures": report.bures,
                "q_star": report.q_star,
                "var_h": report.var_h,
                "gamma_cum": report.gamma_cum,
            },
        )
    write_json(out / "summary.json", summary)
    write_json(out / "config.json", cfg.to_dict())
    print(dumps({k: summary[k] for k in ("b_tau", "bures_tau", "gamma_tau", "delta_l", "tau_qsl")}))
    return EXIT_OK


def _sweep_values(args):
    if args.values is not None:
        vals = _float_list(args.values)
    elif args.start is not None and args.stop is not None:
        if args.num < 1:
            raise ConfigError("--num must be >= 1")
        vals = np.linspace(args.start, args.stop, args.num).tolist()
    else:
        raise ConfigError("give --values or --from/--to")
    if not vals:
        raise ConfigError("no sweep values")
    return vals


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(cfg)
    values = _sweep_values(args)
    if args.closed_form == "tqd":
        if args.axis != "x":
            raise ConfigError("closed-form TQD sweeps run over --axis x")
        sigma2s = _float_list(args.sigma2) if args.sigma2 else [system_from_dict(cfg.system).sigma2]
        files = []
        n_failed = 0
        for s2 in sigma2s:
            if not s2 > 0:
                raise ConfigError("sigma2 values must be > 0")
            res = tqd_sweep(s2, values)
            name = f"sweep_tqd_sigma2_{fmt(s2)}.csv"
            write_sweep_csv(out / name, res)
            files.append(name)
            n_failed += len(res.failed)
        manifest = {"closed_form": "tqd", "axis": "x", "values": values, "sigma2": sigma2s, "files": files}
    else:
        if args.axis not in ("tau", "omega_f", "sigma2"):
            raise ConfigError("simulated sweeps run over --axis tau, omega_f or sigma2")
        spec = system_from_dict(cfg.system)
        kind = cfg.protocol.get("kind")
        if kind not in ("linear", "sta", "tqd", "constant"):
            raise ConfigError("simulated sweeps support protocols linear, sta, tqd and constant")
        base = _build_protocol(cfg, **({args.axis: 1.0} if args.axis != "sigma2" else {}))
        if _units(cfg) is not None and args.axis != "sigma2":
            units = _units(cfg)
            conv = units.time_to_natural if args.axis == "tau" else units.hz_to_natural
            values = [float(conv(v)) for v in values]
        jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
        res = sweep(
            spec,
            kind,
            args.axis,
            values,
            omega0=1.0,
            omega_f=base.omega_f if kind != "constant" else 1.0,
            tau=base.tau,
            settings=cfg.settings(),
            jobs=jobs,
        )
        write_sweep_csv(out / "sweep.csv", res)
        files = ["sweep.csv"]
        n_failed = len(res.failed)
        manifest = {"config": cfg.to_dict(), "axis": args.axis, "values": list(res.values), "files": files}
    manifest["failed"] = n_failed
    write_json(out / "manifest.json", manifest)
    print(f"wrote {', '.join(files)} to {out} ({len(values)} values, {n_failed} failed)")
    if n_failed and not args.keep_going:
        print(f"error: {n_failed} sweep point(s) failed; use --keep-going to accept", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    spec = system_from_dict(cfg.system)
    units = _units(cfg)
    series = read_measured_csv(args.data)
    if units is not None:
        w2 = None if series.omega_sq is None else series.omega_sq / units.omega0**2
        series = type(series)(units.time_to_natural(series.t), series.b, series.s_b, w2)
    if series.omega_sq is None:
        if args.protocol is None and getattr(args, "config", None) is None:
            raise ConfigError(f"{args.data}: no omega_sq column; supply --protocol")
        if args.tau is None:
            t_end = float(series.t[-1])
            cfg.protocol["tau"] = units.time_from_natural(t_end) if units else t_end
        protocol = _build_protocol(cfg)
        if abs(protocol.tau - series.t[-1]) > 1e-9 * max(1.0, protocol.tau):
            raise ConfigError("protocol duration does not match the last sample time")
        series = series.with_omega_sq(protocol.omega_sq(series.t))
    report = metrics_from_data(spec, series)
    targets = args.target.split(",") if args.target else list(DATA_TARGETS)
    unc = {}
    for name in targets:
        value, s = propagate_uncertainty(spec, series, name.strip())
        unc[name.strip()] = {"value": value, "s": s}
    out = _out_dir(cfg)
    write_report_csv(out / "report.csv", report)
    summary = report.summary()
    summary["bound_violated"] = report.meta.get("bound_violated", False)
    summary["system"] = spec.to_dict()
    write_json(out / "summary.json", summary)
    write_json(out / "uncertainties.json", unc)
    print(dumps(unc))
    return EXIT_OK


def catalog_text() -> str:
    header = ("kind", "fields", "sigma2", "example", "value")
    rows = [
        (kind, fields, formula, json.dumps(spec.to_dict(), ensure_ascii=False), fmt(spec.sigma2))
        for kind, fields, formula, spec in CATALOG
    ]
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines)


def cmd_catalog(args) -> int:
    print(catalog_text())
    return EXIT_OK


def _add_run_options(p, protocol_required=False):
    p.add_argument("--config", help="JSON run configuration (flags take precedence)")
    p.add_argument("--system", help="system spec as inline JSON or a JSON file path")
    p.add_argument("--protocol", choices=PROTOCOL_KINDS)
    p.add_argument("--omega-f", type=float, dest="omega_f", help="final trap frequency")
    p.add_argument("--tau", type=float, help="protocol duration")
    p.add_argument("--protocol-file", help="t,omega_sq CSV for --protocol tabulated")
    p.add_argument("--omega0-hz", type=float, help="initial trap frequency in Hz; switches to physical units")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--nodes", type=int, help=f"output grid size (default {DEFAULT_NODES})")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--out", help="output directory (default $QSL_OUT_DIR or ./qsl_out)")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scaleqsl", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one protocol and write trajectory, report and summary")
    _add_run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a protocol family over a parameter axis")
    _add_run_options(p)
    p.add_argument("--axis", required=True, choices=("tau", "omega_f", "sigma2", "x"))
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--from", type=float, dest="start")
    p.add_argument("--to", type=float, dest="stop")
    p.add_argument("--num", type=int, default=20)
    p.add_argument("--closed-form", choices=("tqd",), help="use closed forms instead of simulation")
    p.add_argument("--sigma2", help="comma-separated sigma2 values for closed-form sweeps")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--keep-going", action="store_true", help="exit 0 even if some points fail")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ingest", help="QSL metrics and uncertainties from measured b(t)")
    p.add_argument("data", help="CSV with header t,b,s_b[,omega_sq]")
    _add_run_options(p)
    p.add_argument("--target", help=f"comma-separated subset of {','.join(DATA_TARGETS)}")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("catalog", help="print the system -> sigma2 table")
    p.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QslError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
