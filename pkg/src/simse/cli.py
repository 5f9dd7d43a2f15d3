"""Command-line front end.

Exit codes are the same for every subcommand: 0 success, 1 a domain
failure (diagnostics, engine error, failed check), 2 a usage or I/O problem.
Output files go to ``--output-dir``, else ``$SIMSE_OUTPUT_DIR``, else the
working directory.  Model names that are not found on disk are looked up
among the bundled models, so ``simse run brooks.sd`` works anywhere.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import vv
from .config import ConfigError, parse_assignment
from .devs import (
    OUTPUT, EventTrace, SimulationError, check_file, collect_types, read_trace_csv,
)
from .devs import simulate as simulate_devs
from .diagnostics import DiagnosticError
from .experiment import ExperimentError, load_experiment_config, run_experiment, write_results
from .models import data_path, list_models, load_model, resolve_model
from .sd import ModelFileError, SDError, SDModel, check_model
from .sd import load as load_sd
from .sd import simulate as simulate_sd

OUTPUT_ENV = "SIMSE_OUTPUT_DIR"
DEFAULT_DEVS_UNTIL = 100.0


class UsageError(Exception):
    pass


def _err(*lines: str) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def _out_dir(args) -> Path:
    d = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _find(ref: str, what: str = "model") -> Path:
    try:
        return resolve_model(ref)
    except FileNotFoundError:
        raise UsageError(f"{what} {ref} not found") from None


def _print_diags(diags, path) -> None:
    for d in diags:
        _err(d.format(str(path)))


# -- parse ------------------------------------------------------------------

def cmd_parse(args) -> int:
    try:
        path = resolve_model(args.file)
    except FileNotFoundError:
        raise UsageError(f"cannot read {args.file}") from None
    if path.suffix == ".sd":
        try:
            diags = check_model(load_sd(path))
        except ModelFileError as err:
            diags = err.diagnostics
    else:
        diags = check_file(path)
    _print_diags(diags, path)
    n_err = sum(d.is_error for d in diags)
    if n_err:
        return 1
    print(f"{path}: ok")
    return 0


# -- run --------------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def _plot_data_sd(traj, out: Path, stem: str) -> None:
    d = out / f"{stem}_plot"
    d.mkdir(exist_ok=True)
    for var in traj.variables:
        rows = [f"# time {var}"] + [f"{t:.9g} {v:.9g}" for t, v in zip(traj.times, traj[var])]
        (d / f"{var}.dat").write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {len(traj.variables)} plot files to {d}")


def _plot_data_devs(trace: EventTrace, out: Path, stem: str) -> None:
    """Cumulative event count per output port, one step series per file."""
    d = out / f"{stem}_plot"
    d.mkdir(exist_ok=True)
    series: dict[str, list] = {}
    for e in trace:
        if e.direction == OUTPUT:
            key = f"{e.path}.{e.port}" if e.path else e.port
            series.setdefault(key, []).append(e.time)
    for key, times in sorted(series.items()):
        rows = [f"# time {key}_count"] + [f"{t:.9g} {i}" for i, t in enumerate(times, 1)]
        (d / f"{key}.dat").write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {len(series)} plot files to {d}")


def cmd_run(args) -> int:
    path = _find(args.model)
    try:
        model = load_model(path)
    except (ModelFileError, DiagnosticError) as err:
        _print_diags(err.diagnostics, path)
        return 1
    except ValueError as err:
        raise UsageError(str(err)) from None
    out = _out_dir(args)
    stem = path.stem
    target = Path(args.output) if args.output else out / f"{stem}.csv"
    if isinstance(model, SDModel):
        try:
            overrides = dict(parse_assignment(s) for s in args.set)
        except ValueError as err:
            raise UsageError(str(err)) from None
        try:
            traj = simulate_sd(model, overrides, dt=args.dt, method=args.method, stop=args.until)
        except SDError as err:
            where = f" (t={err.time:g}, variable {err.variable})" if err.time is not None else ""
            _err(f"error {err}{where}")
            return 1
        except DiagnosticError as err:
            _print_diags(err.diagnostics, path)
            return 1
        _write(target, traj.to_csv())
        for a in traj.annotations:
            _err(f"note {a.code} {a.variable} at t={a.time:g}: {a.message}")
        if args.plot_data:
            _plot_data_sd(traj, out, stem)
        return 0
    if args.set or args.dt is not None or args.method is not None:
        raise UsageError("--set, --dt and --method apply to .sd models only")
    injections = []
    if args.inject:
        inj_path = Path(args.inject)
        if not inj_path.is_file():
            raise UsageError(f"cannot read {args.inject}")
        try:
            injections = list(read_trace_csv(inj_path.read_text(encoding="utf-8"), collect_types(model)))
        except (ValueError, KeyError) as err:
            _err(f"{inj_path}:0: error MALFORMED_TRACE {err}")
            return 1
    until = DEFAULT_DEVS_UNTIL if args.until is None else args.until
    try:
        trace = simulate_devs(model, injections, until)
    except SimulationError as err:
        _err(f"error {err}")
        return 1
    _write(target, trace.to_csv())
    if args.plot_data:
        _plot_data_devs(trace, out, stem)
    return 0


# -- experiment -------------------------------------------------------------

def cmd_experiment(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        bundled = data_path(args.config)
        if not bundled.is_file():
            raise UsageError(f"cannot read {args.config}")
        path = bundled
    try:
        cfg = load_experiment_config(path, validate=not args.design_only)
    except ConfigError as err:
        _print_diags(err.diagnostics, path)
        return 1
    design = cfg.design()
    if args.design_only:
        sys.stdout.write(design.table())
        return 0
    try:
        run = run_experiment(cfg.target, design, cfg.responses, cfg.replications, cfg.base_seed,
                             parallel=args.parallel > 1, max_workers=args.parallel)
    except ExperimentError as err:
        _err(f"{path}:0: error {err.code} {err}")
        return 1
    for note in run.notes:
        _err(note)
    out = _out_dir(args)
    target = Path(args.output) if args.output else out / f"{path.stem}-results.csv"
    times = None
    model = getattr(cfg.target, "model", None)
    if isinstance(model, SDModel):
        times = [model.time.start + i * model.time.dt for i in range(model.time.steps() + 1)]
    files = write_results(run, design.factor_names, cfg.responses, target, times)
    print(f"wrote {files[0]} ({len(run)} rows, {len(files) - 1} series files)")
    failed = [r for r in run if not r.ok]
    for r in failed:
        _err(f"trial {r.trial_id} replicate {r.replicate}: error {r.error} {r.message}")
    return 1 if failed else 0


# -- validate ---------------------------------------------------------------

def cmd_validate(args) -> int:
    path = _find(args.model)
    suite_path = Path(args.suite)
    if not suite_path.is_file():
        suite_path = data_path(f"suites/{args.suite}.suite")
        if not suite_path.is_file():
            raise UsageError(f"suite {args.suite} not found")
    try:
        suite = vv.load_suite(suite_path)
    except ConfigError as err:
        _print_diags(err.diagnostics, suite_path)
        return 2
    if suite.model and Path(suite.model).name != path.name:
        raise UsageError(f"suite {suite.name} is written for {suite.model}, not {path.name}")
    try:
        model = load_model(path)
    except (ModelFileError, DiagnosticError) as err:
        _print_diags(err.diagnostics, path)
        return 1
    report = vv.run_suite(model, suite)
    sys.stdout.write(report.to_text())
    target = Path(args.output) if args.output else _out_dir(args) / f"{path.stem}-{suite.name}-vnv.csv"
    _write(target, report.to_csv())
    return 0 if report.passed else 1


# -- list-models ------------------------------------------------------------

def cmd_list_models(args) -> int:
    for name, kind in list_models():
        print(f"{name:18} {kind}")
    suites = sorted(p.stem for p in data_path("suites").iterdir() if p.suffix == ".suite")
    configs = sorted(p.name for p in data_path("").iterdir() if p.suffix == ".exp")
    print("suites: " + ", ".join(suites))
    print("experiment configs: " + ", ".join(configs))
    return 0


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simse", description="Discrete-event and system dynamics simulation toolkit.")
    p.add_argument("--output-dir", help=f"directory for output files (default ${OUTPUT_ENV} or .)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="check a model file and print diagnostics")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("run", help="simulate a model and write CSV")
    sp.add_argument("model")
    sp.add_argument("--set", action="append", default=[], metavar="NAME=VALUE", help="override a constant")
    sp.add_argument("--until", type=float, help=f"stop time (DEVS default {DEFAULT_DEVS_UNTIL:g})")
    sp.add_argument("--dt", type=float, help="step size (SD)")
    sp.add_argument("--method", choices=["euler", "rk4"], help="integration method (SD)")
    sp.add_argument("--inject", metavar="CSV", help="input events in trace CSV form (DEVS)")
    sp.add_argument("--plot-data", action="store_true", help="also write two-column files per variable")
    sp.add_argument("-o", "--output", help="output file (default <output-dir>/<model>.csv)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("experiment", help="run a factorial experiment from a config file")
    sp.add_argument("config")
    sp.add_argument("--design-only", action="store_true", help="print the trial table without running")
    sp.add_argument("--parallel", type=int, default=1, metavar="N", help="worker threads")
    sp.add_argument("-o", "--output", help="results file (default <output-dir>/<config>-results.csv)")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("validate", help="run a V&V suite against a model")
    sp.add_argument("model")
    sp.add_argument("--suite", required=True, help="suite file or bundled suite name")
    sp.add_argument("-o", "--output", help="report CSV (default <output-dir>/<model>-<suite>-vnv.csv)")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("list-models", help="list bundled models, suites and configs")
    sp.set_defaults(func=cmd_list_models)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except UsageError as err:
        _err(f"simse: error: {err}")
        return 2
    except OSError as err:
        _err(f"simse: error: {err}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
