"""Command-line entry point: ``codedgrad <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import reference
from .analysis import (
    CumulativeType,
    cdf_from_table,
    count_recoverable_by_type,
    expected_from_table,
    write_count_table,
)
from .errors import CodedGradError, ConfigError
from .gd import RegressionProblem, centralized_gd, default_learning_rate, run_gd
from .schedule import Scheme, build_schedule, default_delivery, validate_schedule
from .simulation import (
    SimConfig,
    simulate_trials,
    sweep_tolerance,
    write_metric_csvs,
    write_sweep_csv,
    write_trace_csv,
)
from .straggler import StragglerParams

# flags that are shorthands for config keys
_FLAG_KEYS = {"seed": "seed", "trials": "trials", "tolerance_grid": "tolerance_grid", "threads": "threads"}


def _schedule(scheme: str, m: int, k: int, r: int, eval_points: str):
    sch = Scheme.parse(scheme)
    kw = {"eval_points": eval_points} if sch is Scheme.MCC else {}
    return build_schedule(sch, m, k, r, **kw)


def _writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


# --- tables -------------------------------------------------------------------


def _enumerate_k4(m_prime: int) -> dict[str, dict[CumulativeType, int]]:
    out = {}
    for name in reference.SCHEMES:
        s = _schedule(name, 4, 4, 2, "powers_of_two")
        out[name] = count_recoverable_by_type(s, default_delivery(Scheme.parse(name)), m_prime)
    return out


def _write_table(path: Path, expected, tables) -> list[str]:
    """Write one table; return mismatch descriptions."""
    mismatches = []
    listed = set()
    fh, w = _writer(path)
    with fh:
        w.writerow(["row", "N0", "N1", "N2", *reference.SCHEMES])
        for label, counts, values in expected:
            n = CumulativeType(counts)
            listed.add(n)
            got = [tables[name][n] for name in reference.SCHEMES]
            w.writerow([label, *counts, *got])
            for name, want, have in zip(reference.SCHEMES, values, got):
                if want != have:
                    mismatches.append(f"{path.name} {label} {name}: expected {want}, got {have}")
        for n in sorted(tables[reference.SCHEMES[0]]):
            if n in listed:
                continue
            got = [tables[name][n] for name in reference.SCHEMES]
            w.writerow(["-", *n.counts, *got])
            for name, have in zip(reference.SCHEMES, got):
                if have:
                    mismatches.append(f"{path.name} unlisted type {n.counts} {name}: expected 0, got {have}")
    return mismatches


def cmd_tables(cfg: dict, out: Path) -> int:
    mismatches = _write_table(out / "table1.csv", reference.FULL_GRADIENT, _enumerate_k4(4))
    mismatches += _write_table(out / "table2.csv", reference.PARTIAL_GRADIENT, _enumerate_k4(3))
    lines = [f"mismatches: {len(mismatches)}", *mismatches]
    for (table, label), note in sorted(reference.LABEL_NOTES.items()):
        lines.append(f"note: {table} {label} {note}")
    (out / "tables_diff.txt").write_text("\n".join(lines) + "\n")
    print(f"tables: {len(mismatches)} mismatches")
    return 0 if not mismatches else 1


# --- analyze ------------------------------------------------------------------


def cmd_analyze(cfg: dict, out: Path) -> int:
    params = StragglerParams(cfg["mu"], cfg["alpha"])
    thresholds = [int(t) for t in cfg["thresholds"]]
    if cfg["t_points"] < 2:
        raise ConfigError("t_points must be at least 2")
    grid = np.linspace(0.0, cfg["t_max"], cfg["t_points"])
    efh, ew = _writer(out / "etimes.csv")
    with efh:
        ew.writerow(["scheme", "threshold", "expected_T"])
        for name in cfg["schemes"]:
            sch = Scheme.parse(name)
            s = _schedule(sch.value, cfg["M"], cfg["K"], cfg["r"], cfg["eval_points"])
            curves = []
            for m_prime in thresholds:
                table = count_recoverable_by_type(s, default_delivery(sch), m_prime)
                write_count_table(out / f"counts_{sch.value}_m{m_prime}.csv", table)
                curves.append([cdf_from_table(table, float(t), params) for t in grid])
                ew.writerow([sch.value, m_prime, repr(expected_from_table(table, s.rows, params))])
            fh, w = _writer(out / f"cdf_{sch.value}.csv")
            with fh:
                w.writerow(["t", *(f"mprime_{m}" for m in thresholds)])
                for i, t in enumerate(grid):
                    w.writerow([repr(float(t)), *(repr(c[i]) for c in curves)])
    print(f"analyze: {len(cfg['schemes'])} schemes, thresholds {thresholds}")
    return 0


# --- simulate -----------------------------------------------------------------


def _sim_base(cfg: dict) -> SimConfig:
    return SimConfig(
        scheme="CPGC", M=cfg["M"], K=cfg["K"], r=cfg["r"], mu=cfg["mu"], alpha=cfg["alpha"],
        trials=cfg["trials"], seed=cfg["seed"], chunk_size=cfg["chunk_size"],
        threads=cfg["threads"], eval_points=cfg["eval_points"],
    )


def cmd_simulate(cfg: dict, out: Path) -> int:
    base = _sim_base(cfg)
    grid = [float(t) for t in cfg["tolerance_grid"]]
    rows = sweep_tolerance(base, grid, cfg["schemes"])
    write_sweep_csv(out / "sweep.csv", rows)
    write_metric_csvs(out, rows)
    if cfg["trace"]:
        for name in cfg["schemes"]:
            cfgs = [replace(base, scheme=Scheme.parse(name).value, tolerance=t) for t in grid]
            res = simulate_trials(
                cfgs[0].schedule(), cfgs[0].delivery, [c.threshold for c in cfgs], base.params,
                base.trials, base.seed, base.chunk_size, base.threads,
            )
            for c in cfgs:
                write_trace_csv(out / f"trace_{c.scheme_enum.value}_tol{c.tolerance!r}.csv", res, c.threshold)
    for row in rows:
        print(f"{row.scheme:7s} tol={row.tolerance:<5g} T={row.mean_T:.4f} load={row.mean_load:.2f} volume={row.mean_volume:.3f}")
    return 0


# --- gd -----------------------------------------------------------------------


def cmd_gd(cfg: dict, out: Path) -> int:
    problem = RegressionProblem.synthetic(cfg["N"], cfg["L"], cfg["M"], cfg["data_seed"], cfg["noise"])
    sim = SimConfig(
        scheme=Scheme.parse(cfg["scheme"]).value, M=cfg["M"], K=cfg["K"], r=cfg["r"],
        mu=cfg["mu"], alpha=cfg["alpha"], tolerance=cfg["tolerance"], seed=cfg["seed"],
        eval_points=cfg["eval_points"],
    )
    eta = cfg["eta"] if cfg["eta"] > 0 else None
    run = run_gd(problem, sim, cfg["iterations"], eta=eta)
    run.write_csv(out / "gd_trajectory.csv")
    ref = centralized_gd(problem, cfg["iterations"], eta or default_learning_rate(problem))
    fh, w = _writer(out / "gd_reference.csv")
    with fh:
        w.writerow(["iter", "loss"])
        for it, theta in enumerate(ref):
            w.writerow([it, repr(problem.loss(theta))])
    print(f"gd: final loss {run.losses[-1]:.6g}, total time {sum(run.times):.4f}, "
          f"worst decode error {max(run.decode_errors):.2e}")
    return 0


# --- dump-schedule ------------------------------------------------------------


def cmd_dump_schedule(cfg: dict, out: Path) -> int:
    s = _schedule(cfg["scheme"], cfg["M"], cfg["K"], cfg["r"], cfg["eval_points"])
    (out / "schedule.json").write_text(s.to_json() + "\n")
    (out / "schedule.txt").write_text(s.to_text())
    rep = validate_schedule(s)
    for msg in rep.warnings:
        print(f"warning: {msg}")
    for msg in rep.violations:
        print(f"violation: {msg}", file=sys.stderr)
    return 0 if rep.ok else 1


COMMANDS = {
    "tables": cmd_tables,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "gd": cmd_gd,
    "dump-schedule": cmd_dump_schedule,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codedgrad", description="Coded partial-gradient experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file (a previous run's manifest.json also works)")
        sp.add_argument("--out", default=f"runs/{name}", help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
        sp.add_argument("--seed")
        sp.add_argument("--trials")
        sp.add_argument("--tolerance-grid", dest="tolerance_grid", metavar="A,B,C")
        sp.add_argument("--threads")
    return p


def resolve_args(args) -> tuple[dict, dict]:
    overrides = cfgmod.parse_overrides(args.overrides)
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if key not in cfgmod.SCHEMAS[args.command]:
            raise ConfigError(f"--{flag.replace('_', '-')} does not apply to '{args.command}'")
        overrides[key] = value
    file_data = None
    if args.config:
        raw = json.loads(Path(args.config).read_text()) if Path(args.config).exists() else None
        if isinstance(raw, dict) and raw.get("subcommand") not in (None, args.command):
            raise ConfigError(f"manifest was written by '{raw['subcommand']}', not '{args.command}'")
        file_data = cfgmod.load_file(args.config)
    return cfgmod.resolve(args.command, file_data, overrides), overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, overrides = resolve_args(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = cfgmod.manifest(args.command, cfg)
        manifest.update(config_path=args.config, out=str(out), overrides=overrides)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        return COMMANDS[args.command](cfg, out)
    except (CodedGradError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
