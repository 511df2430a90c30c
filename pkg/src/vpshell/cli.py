"""Batch driver: runs, analytic tables, classification and sweeps.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 classification input error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys

import numpy as np

from . import kurth as kurth_mod
from .classify import classify as _classify
from .config import RunConfig, load_config
from .csvio import (
    read_diagnostics,
    write_diagnostics,
    write_manifest,
    write_snapshot,
)
from .dynamics import IntegratorConfig, run
from .errors import ClassifyInputError, ConfigError, DomainError, NumericalError
from .scenarios import (
    CoreSpec,
    ShellSpec,
    build_circular_core,
    build_shell,
    build_shell_plus_core,
)

__all__ = ["main", "cmd_run", "cmd_kurth", "cmd_classify", "cmd_sweep"]


def _build_scenario(config: RunConfig, seed):
    scenario = config.scenario
    if scenario == "shell":
        spec = ShellSpec(
            mass=config["shell.mass"],
            r_inner=config["shell.r_inner"],
            r_outer=config["shell.r_outer"],
            w_min=config["shell.w_min"],
            w_max=config["shell.w_max"],
            ell_min=config["shell.ell_min"],
            ell_max=config["shell.ell_max"],
            n=config["shell.n"],
            seed=seed,
        )
        ensemble, report = build_shell(spec)
        report_dict = {
            "escape_threshold": report.escape_threshold,
            "escape_margin_sq": report.margin_sq,
            "escape_condition_satisfied": report.satisfied,
        }
        return ensemble, report_dict
    if scenario == "core":
        spec = CoreSpec(
            mass=config["core.mass"],
            radius=config["core.radius"],
            n=config["core.n"],
            seed=seed,
        )
        return build_circular_core(spec), {}
    if scenario == "shell_plus_core":
        core_spec = CoreSpec(
            mass=config["core.mass"],
            radius=config["core.radius"],
            n=config["core.n"],
            seed=seed,
        )
        shell_spec = ShellSpec(
            mass=config["shell.mass"],
            r_inner=config["shell.r_inner"],
            r_outer=config["shell.r_outer"],
            w_min=config["shell.w_min"],
            w_max=config["shell.w_max"],
            ell_min=config["shell.ell_min"],
            ell_max=config["shell.ell_max"],
            n=config["shell.n"],
            seed=seed + 1,
        )
        ensemble, report = build_shell_plus_core(core_spec, shell_spec)
        report_dict = {
            "escape_threshold": report.escape_threshold,
            "total_energy": report.total_energy,
            "core_energy": report.core_energy,
            "shell_mass_max": report.shell_mass_max,
            "momentum_window": list(report.momentum_window),
            "double_inequality_ok": report.double_inequality_ok,
            "escape_condition_satisfied": report.escape_satisfied,
        }
        return ensemble, report_dict
    raise ConfigError(f"scenario {scenario!r} is not a simulator scenario")


def _kurth_records(k, t_end, cadence, q_list, r_grid):
    n = int(math.floor(t_end / cadence + 1.0e-9)) + 1
    times = np.arange(n) * cadence
    if times[-1] < t_end - 1.0e-9 * cadence:
        times = np.append(times, t_end)
    phi, phi_dot = kurth_mod.phi_closed_form(times, k)
    records = []
    for i, t in enumerate(times):
        state = kurth_mod.KurthState(float(t), float(phi[i]), float(phi_dot[i]))
        records.append(kurth_mod.kurth_diagnostics(state, q_list=q_list, r_grid=r_grid))
    return records


def cmd_run(config: RunConfig, out_dir, seed=None, threads=1):
    """Execute one configured run; writes diagnostics.csv, snapshots and
    manifest.json into `out_dir`.  Returns the diagnostics path.

    `threads` is accepted for interface symmetry with sweep; a single
    run is sequential and deterministic regardless of its value.
    """
    os.makedirs(out_dir, exist_ok=True)
    seed = config["seed"] if seed is None else int(seed)
    r_grid = config["r_grid"]
    q_list = config["q_list"]
    csv_path = os.path.join(out_dir, "diagnostics.csv")

    if config.scenario == "kurth":
        records = _kurth_records(
            config["kurth.k"], config["t_end"], config["output_cadence"],
            q_list, r_grid,
        )
        write_diagnostics(csv_path, records, r_grid, q_list)
        write_manifest(
            os.path.join(out_dir, "manifest.json"),
            "kurth", config.values, seed,
        )
        return csv_path

    ensemble, scenario_report = _build_scenario(config, seed)
    integrator = IntegratorConfig(
        t_end=config["t_end"],
        output_cadence=config["output_cadence"],
        dt_initial=config["dt_initial"],
        dt_safety=config["dt_safety"],
        reflection_enabled=config["reflection"],
    )
    n_bins = config["n_bins"] or None
    sink = run(
        ensemble,
        integrator,
        r_grid=r_grid,
        q_list=q_list,
        n_bins=n_bins,
        snapshot_times=config["snapshot_times"],
    )
    write_diagnostics(csv_path, sink.records, r_grid, q_list)
    for snap in sink.snapshots:
        name = f"snapshot_t{repr(float(snap.time))}.csv"
        write_snapshot(os.path.join(out_dir, name), snap)
    write_manifest(
        os.path.join(out_dir, "manifest.json"),
        "run", config.values, seed,
        extra={"scenario_report": scenario_report} if scenario_report else None,
    )
    return csv_path


def cmd_kurth(k, t_end, cadence, q_list, out_dir, r_grid=(1.0, 2.0, 4.0)):
    """Analytic trajectory table for one family member."""
    values = {
        "scenario": "kurth",
        "kurth.k": float(k),
        "t_end": float(t_end),
        "output_cadence": float(cadence),
        "q_list": tuple(float(q) for q in q_list),
        "r_grid": tuple(float(r) for r in r_grid),
        "seed": 0,
    }
    config = RunConfig("kurth", values)
    return cmd_run(config, out_dir)


def cmd_classify(csv_path, energy=None, momentum=0.0, mass=None, out_path=None):
    """Classify a diagnostics file; writes a JSON report when asked.

    `energy` and `mass` default to the first-row values of the file.
    Returns the ClassificationReport.
    """
    parsed = read_diagnostics(csv_path)
    if energy is None:
        energy = float(parsed.energy[0])
    if mass is None:
        mass = float(parsed.mass[0])
    report = _classify(parsed, energy, momentum, mass)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
    return report


def _sweep_one(args):
    base_values, param, value, run_dir = args
    values = dict(base_values)
    values[param] = value
    config = RunConfig(values["scenario"], values)
    csv_path = cmd_run(config, run_dir)
    report = cmd_classify(csv_path, out_path=os.path.join(run_dir, "report.json"))
    parsed = read_diagnostics(csv_path)
    return {
        "value": value,
        "E": float(parsed.energy[0]),
        "Q2_over_2M": report.threshold.q_sq_over_2m,
        "label": report.label,
        "exponent": None if report.growth is None else report.growth.exponent,
        "M_infinity": report.m_infinity,
    }


def cmd_sweep(config: RunConfig, param, values, out_dir, threads=1):
    """One run per value of `param`, classified, plus summary.csv.

    Failed runs are recorded with label `failed`; the sweep continues.
    The summary preserves the input value order regardless of the
    execution order.
    """
    from .config import _SCHEMA

    caster = _SCHEMA.get(param)
    if caster is None:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    if caster not in (int, float):
        raise ConfigError(f"sweep parameter {param!r} is not scalar")
    os.makedirs(out_dir, exist_ok=True)
    jobs = []
    for i, value in enumerate(values):
        run_dir = os.path.join(out_dir, f"run_{i:03d}")
        jobs.append((dict(config.values), param, caster(value), run_dir))

    results = [None] * len(jobs)

    def record(i, outcome):
        results[i] = outcome

    if threads > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(_sweep_one, job): i for i, job in enumerate(jobs)}
            for future in concurrent.futures.as_completed(futures):
                i = futures[future]
                try:
                    record(i, future.result())
                except Exception:
                    record(i, {"value": jobs[i][2], "label": "failed"})
    else:
        for i, job in enumerate(jobs):
            try:
                record(i, _sweep_one(job))
            except Exception:
                record(i, {"value": job[2], "label": "failed"})

    def fmt(value):
        if value is None:
            return ""
        return repr(float(value))

    lines = ["value,E,Q2_over_2M,label,exponent,M_infinity"]
    for outcome in results:
        lines.append(
            ",".join(
                (
                    fmt(outcome.get("value")),
                    fmt(outcome.get("E")),
                    fmt(outcome.get("Q2_over_2M")),
                    outcome.get("label", "failed"),
                    fmt(outcome.get("exponent")),
                    fmt(outcome.get("M_infinity")),
                )
            )
        )
    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return summary_path


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vpshell",
        description="Spherical shell-particle runs, analytic tables, "
        "classification and parameter sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured run")
    p_run.add_argument("--config", required=True, help="path to a key = value file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--threads", type=int, default=1)

    p_kurth = sub.add_parser("kurth", help="analytic uniform-ball trajectory table")
    p_kurth.add_argument("--k", type=float, required=True, help="initial dilation rate")
    p_kurth.add_argument("--t-end", type=float, required=True)
    p_kurth.add_argument("--cadence", type=float, required=True)
    p_kurth.add_argument("--q-list", default="1.6666666666666667",
                         help="comma separated density-norm exponents")
    p_kurth.add_argument("--r-grid", default="1.0,2.0,4.0",
                         help="comma separated ball radii")
    p_kurth.add_argument("--out", default="out")

    p_cls = sub.add_parser("classify", help="label a diagnostics file")
    p_cls.add_argument("csv", help="diagnostics.csv to classify")
    p_cls.add_argument("--energy", type=float, default=None)
    p_cls.add_argument("--momentum", type=float, default=0.0, help="|Q|")
    p_cls.add_argument("--mass", type=float, default=None)
    p_cls.add_argument("--out", default=None, help="report path (JSON)")

    p_sweep = sub.add_parser("sweep", help="run one config across parameter values")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, help="config key to vary")
    p_sweep.add_argument("--values", required=True, help="comma separated values")
    p_sweep.add_argument("--out", default="sweep")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            if args.seed is not None:
                config = config.replace(seed=args.seed)
            cmd_run(config, args.out, threads=args.threads)
        elif args.command == "kurth":
            q_list = tuple(float(q) for q in args.q_list.split(","))
            r_grid = tuple(float(r) for r in args.r_grid.split(","))
            cmd_kurth(args.k, args.t_end, args.cadence, q_list, args.out, r_grid)
        elif args.command == "classify":
            report = cmd_classify(
                args.csv, args.energy, args.momentum, args.mass, args.out
            )
            print(report.label)
        elif args.command == "sweep":
            config = load_config(args.config)
            if args.seed is not None:
                config = config.replace(seed=args.seed)
            values = [float(v) for v in args.values.split(",")] if args.values else []
            cmd_sweep(config, args.param, values, args.out, threads=args.threads)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ClassifyInputError as exc:
        print(f"classification input error: {exc}", file=sys.stderr)
        return 4
    return 0
