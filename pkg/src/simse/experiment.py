"""Design of experiments: full-factorial designs, trial execution and
one-at-a-time sensitivity analysis over either engine.

Trials are independent.  They may run on a thread pool, but results are
always sorted by ``(trial_id, replicate)`` before they are returned, so the
export does not depend on the execution order.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .config import ConfigError, Directive, load_config, parse_real
from .devs import INFINITY, OUTPUT, EventTrace
from .devs import simulate as simulate_devs
from .diagnostics import Diagnostic, DiagnosticError
from .models import FmsParams, fms_model, load_model, resolve_model
from .sd import SDModel, Trajectory, initial_values
from .sd import simulate as simulate_sd

log = logging.getLogger(__name__)

REDUCERS = ("final_value", "min_after", "max", "time_to_recover", "full_series", "event_count",
            "first_event_time")
_NEEDS_PARAM = {"min_after", "time_to_recover"}


class ExperimentError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class Factor:
    name: str
    levels: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))
        if not self.levels:
            raise ExperimentError("EMPTY_FACTOR", f"factor {self.name} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise ExperimentError("DUPLICATE_LEVEL", f"factor {self.name} repeats a level")


@dataclass(frozen=True)
class Trial:
    trial_id: int
    assignment: dict


@dataclass
class Design:
    factors: list
    trials: list

    @property
    def factor_names(self) -> list[str]:
        return [f.name for f in self.factors]

    def table(self) -> str:
        """Plain-text trial table, one row per trial."""
        header = ["trial"] + self.factor_names
        rows = [[str(t.trial_id)] + [_fmt(t.assignment[n]) for n in self.factor_names] for t in self.trials]
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + rows]
        return "\n".join(lines) + "\n"


def full_factorial(factors: Sequence[Factor]) -> Design:
    """Cartesian product of all levels; the first factor varies fastest."""
    factors = list(factors)
    if not factors:
        raise ExperimentError("EMPTY_FACTOR", "a design needs at least one factor")
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise ExperimentError("DUPLICATE_FACTOR", "factor names must be unique")
    # itertools.product varies the last position fastest, so reverse twice
    combos = itertools.product(*[f.levels for f in reversed(factors)])
    trials = [Trial(i, dict(zip(names, reversed(combo)))) for i, combo in enumerate(combos, 1)]
    return Design(factors, trials)


@dataclass(frozen=True)
class ResponseSpec:
    """How to reduce one output variable to a response.

    ``variable`` is a trajectory column for SD targets.  For DEVS targets it
    names an output port, ``port`` for the top model or ``path.port`` for a
    component, and only ``event_count`` / ``first_event_time`` apply.
    """

    name: str
    variable: str
    reducer: str = "final_value"
    param: Optional[float] = None

    def __post_init__(self):
        if self.reducer not in REDUCERS:
            raise ExperimentError("UNKNOWN_REDUCER", f"{self.reducer} (expected one of {', '.join(REDUCERS)})")
        if self.reducer in _NEEDS_PARAM and self.param is None:
            raise ExperimentError("MISSING_PARAMETER", f"{self.reducer} needs a time parameter")

    def reduce(self, output):
        if isinstance(output, EventTrace):
            return self._reduce_trace(output)
        if self.variable not in output:
            raise ExperimentError("UNKNOWN_VARIABLE", f"no variable {self.variable} in the trajectory")
        t, y = output.times, output[self.variable]
        if self.reducer in _NEEDS_PARAM and not t[0] <= self.param <= t[-1]:
            raise ExperimentError("OUT_OF_HORIZON", f"{self.reducer}({self.param}) is outside the run")
        if self.reducer == "final_value":
            return float(y[-1])
        if self.reducer == "max":
            return float(y.max())
        if self.reducer == "min_after":
            return float(y[t >= self.param].min())
        if self.reducer == "time_to_recover":
            return time_to_recover(t, y, self.param)
        if self.reducer == "full_series":
            return np.array(y)
        raise ExperimentError("UNKNOWN_REDUCER", f"{self.reducer} does not apply to trajectories")

    def _reduce_trace(self, trace: EventTrace):
        path, _, port = self.variable.rpartition(".")
        events = [e for e in trace if e.direction == OUTPUT and e.port == port and e.path == path]
        if self.reducer == "event_count":
            return float(len(events))
        if self.reducer == "first_event_time":
            return events[0].time if events else math.inf
        raise ExperimentError("UNKNOWN_REDUCER", f"{self.reducer} does not apply to event traces")


def time_to_recover(times, values, baseline_time: float) -> float:
    """Time after ``baseline_time`` until the series, having dipped below its
    baseline value, climbs back to at least that value.  0 when it never
    dips, ``inf`` when it never recovers."""
    i0 = int(np.argmin(np.abs(times - baseline_time)))
    base = values[i0]
    below = np.flatnonzero(values[i0:] < base)
    if not below.size:
        return 0.0
    dip = i0 + int(below[0])
    back = np.flatnonzero(values[dip:] >= base)
    if not back.size:
        return math.inf
    return float(times[dip + int(back[0])] - times[i0])


@dataclass
class TrialResult:
    trial_id: int
    replicate: int
    assignment: dict
    seed: int
    responses: dict = field(default_factory=dict)
    error: Optional[str] = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.error is None

    def key(self) -> tuple:
        """Comparable summary (series as tuples) for order-independence checks."""
        resp = {k: tuple(v.tolist()) if isinstance(v, np.ndarray) else v for k, v in self.responses.items()}
        return (self.trial_id, self.replicate, tuple(sorted(self.assignment.items())), self.seed,
                tuple(sorted(resp.items())), self.error)


# -- targets ----------------------------------------------------------------

class SdTarget:
    """Runs an SD model; factors are constants or stock initial values."""

    deterministic = True

    def __init__(self, model: SDModel, overrides: Optional[Mapping[str, float]] = None):
        self.model = model
        self.overrides = dict(overrides or {})

    def parameters(self) -> dict[str, float]:
        out = dict(self.model.constants)
        out.update(self.overrides)
        out.update(zip((s.name for s in self.model.stocks), initial_values(self.model, self.overrides)))
        return out

    def run(self, assignment: Mapping[str, float], seed: int) -> Trajectory:
        return simulate_sd(self.model, {**self.overrides, **assignment})


class DevsTarget:
    """Runs a DEVS model built by ``builder(params) -> (spec, injections)``."""

    deterministic = True

    def __init__(self, builder: Callable, defaults: Mapping[str, float], until: float = INFINITY):
        self.builder = builder
        self.defaults = dict(defaults)
        self.until = until

    def parameters(self) -> dict[str, float]:
        return dict(self.defaults)

    def run(self, assignment: Mapping[str, float], seed: int) -> EventTrace:
        spec, injections = self.builder({**self.defaults, **assignment})
        return simulate_devs(spec, injections, self.until)


FMS_NUMERIC = ("flood_depth_threshold", "sensor_period", "boot_time")


def fms_target(until: float = 100.0, overrides: Optional[Mapping[str, float]] = None) -> DevsTarget:
    """The FMS model with its numeric parameters exposed as factors."""
    base = FmsParams()
    defaults = {n: float(getattr(base, n)) for n in FMS_NUMERIC}
    defaults.update(overrides or {})

    def build(params):
        return fms_model(FmsParams(**{n: params[n] for n in FMS_NUMERIC})), []

    return DevsTarget(build, defaults, until)


def static_target(spec, injections=(), until: float = INFINITY) -> DevsTarget:
    """A DEVS model without parameters."""
    return DevsTarget(lambda params: (spec, list(injections)), {}, until)


# -- execution --------------------------------------------------------------

@dataclass
class ExperimentRun:
    results: list
    notes: list = field(default_factory=list)
    design: Optional[Design] = None

    def __iter__(self):
        return iter(self.results)

    def __len__(self) -> int:
        return len(self.results)

    def __getitem__(self, i):
        return self.results[i]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)


def _error_code(err: Exception) -> str:
    if isinstance(err, DiagnosticError):
        return err.codes[0] if err.codes else "INVALID_MODEL"
    return getattr(err, "code", type(err).__name__)


def _run_trial(target, trial: Trial, replicate: int, seed: int, responses) -> TrialResult:
    result = TrialResult(trial.trial_id, replicate, dict(trial.assignment), seed)
    try:
        output = target.run(trial.assignment, seed)
        result.responses = {r.name: r.reduce(output) for r in responses}
    except Exception as err:  # one failing corner must not abort the experiment
        result.error = _error_code(err)
        result.message = str(err)
        result.responses = {}
    return result


def run_experiment(target, design: Design, responses: Sequence[ResponseSpec], replications: int = 1,
                   base_seed: int = 0, parallel: bool = False, max_workers: Optional[int] = None) -> ExperimentRun:
    params = target.parameters()
    missing = [f.name for f in design.factors if f.name not in params]
    if missing:
        raise ExperimentError("UNRESOLVED_FACTOR", f"model has no parameter {', '.join(missing)}")
    if replications < 1:
        raise ExperimentError("BAD_REPLICATIONS", "replications must be at least 1")
    notes = []
    effective = replications
    if target.deterministic and replications > 1:
        effective = 1
        notes.append(f"NOTE: deterministic model, {replications} replications collapsed to 1")
        log.info(notes[-1])
    jobs = [(t, r, base_seed + r) for t in design.trials for r in range(effective)]
    if parallel:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda j: _run_trial(target, *j, responses), jobs))
    else:
        results = [_run_trial(target, *j, responses) for j in jobs]
    results.sort(key=lambda r: (r.trial_id, r.replicate))
    return ExperimentRun(results, notes, design)


def sensitivity_oat(target, baseline: Mapping[str, float], factor: str, deltas: Iterable[float],
                    response: ResponseSpec) -> list[tuple[float, float]]:
    """Perturb ``factor`` by each relative delta around ``baseline``.

    The baseline itself is always included as delta 0; a failed run yields
    ``nan`` for that point.
    """
    params = target.parameters()
    if factor not in params:
        raise ExperimentError("UNRESOLVED_FACTOR", f"model has no parameter {factor}")
    unknown = [k for k in baseline if k not in params]
    if unknown:
        raise ExperimentError("UNRESOLVED_FACTOR", f"model has no parameter {', '.join(unknown)}")
    base_value = float(baseline.get(factor, params[factor]))
    points = sorted(set(float(d) for d in deltas) | {0.0})
    out = []
    for d in points:
        assignment = {**baseline, factor: base_value * (1 + d)}
        r = _run_trial(target, Trial(0, assignment), 0, 0, [response])
        out.append((d, r.responses[response.name] if r.ok else math.nan))
    return out


# -- export -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.9g" % x


def series_name(response: str, result: TrialResult) -> str:
    return f"{response}_trial{result.trial_id}_rep{result.replicate}.csv"


def results_csv(run: ExperimentRun, factor_names: Sequence[str], responses: Sequence[ResponseSpec],
                series_dir: str = "series") -> str:
    """Results table; full series are referenced by file name."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "replicate"] + list(factor_names) + [r.name for r in responses])
    for res in run.results:
        row = [res.trial_id, res.replicate] + [_fmt(res.assignment[f]) for f in factor_names]
        for r in responses:
            if not res.ok:
                row.append(f"ERROR:{res.error}")
            elif r.reducer == "full_series":
                row.append(f"{series_dir}/{series_name(r.name, res)}")
            else:
                row.append(_fmt(res.responses[r.name]))
        w.writerow(row)
    return buf.getvalue()


def write_results(run: ExperimentRun, factor_names, responses, path, times=None) -> list[Path]:
    """Write the results CSV and one ``time,value`` file per full series."""
    path = Path(path)
    series_dir = path.with_name(path.stem + "_series")
    path.write_text(results_csv(run, factor_names, responses, series_dir.name), encoding="utf-8")
    written = [path]
    for res in run.results:
        for r in responses:
            if r.reducer != "full_series" or not res.ok:
                continue
            series_dir.mkdir(parents=True, exist_ok=True)
            values = res.responses[r.name]
            grid = times if times is not None else np.arange(len(values))
            lines = [f"time,{r.variable}"] + [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(grid, values)]
            target = series_dir / series_name(r.name, res)
            target.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(target)
    return written


# -- configuration files ----------------------------------------------------

@dataclass
class ExperimentConfig:
    """Parsed experiment configuration.

    Directives::

        model <file | fms>          model to run (files resolve next to the config)
        set <name>=<value>          fixed override applied to every trial
        factor <name> <level>...    one factor; declaration order is kept
        response <name> <variable> <reducer> [<parameter>]
        replications <n>
        seed <n>
        until <time>                DEVS horizon (default 100)
    """

    model_ref: str
    target: object
    factors: list
    responses: list
    replications: int = 1
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)
    path: Optional[str] = None

    def design(self) -> Design:
        return full_factorial(self.factors)


def load_experiment_config(path, validate: bool = True) -> ExperimentConfig:
    """Parse and resolve a config file, collecting every problem into one
    :class:`ConfigError`.  ``validate=False`` skips factor resolution."""
    directives = load_config(path)
    problems: list[Diagnostic] = []
    model_ref, model_dir = None, None
    factors, responses, overrides = [], [], {}
    replications, seed, until = 1, 0, 100.0
    for d in directives:
        try:
            kind, value = _directive(d)
        except ValueError as err:
            problems.append(d.error("CONFIG_ERROR", str(err)))
            continue
        except ExperimentError as err:
            problems.append(d.error(err.code, str(err)))
            continue
        if kind == "model":
            model_ref, model_dir = value, d.base_dir()
        elif kind == "set":
            overrides.update(value)
        elif kind == "factor":
            if any(f.name == value.name for f in factors):
                problems.append(d.error("DUPLICATE_FACTOR", f"factor {value.name} declared twice"))
            factors.append(value)
        elif kind == "response":
            responses.append(value)
        elif kind == "replications":
            replications = value
        elif kind == "seed":
            seed = value
        elif kind == "until":
            until = value
    if model_ref is None:
        problems.append(Diagnostic("CONFIG_ERROR", "no model directive", path=str(path)))
    if not factors:
        problems.append(Diagnostic("EMPTY_FACTOR", "no factor directive", path=str(path)))
    if not responses:
        problems.append(Diagnostic("CONFIG_ERROR", "no response directive", path=str(path)))

    target = None
    if model_ref is not None:
        try:
            target = _target(model_ref, model_dir, overrides, until)
        except FileNotFoundError:
            problems.append(Diagnostic("MISSING_FILE", f"model {model_ref} not found", path=str(path)))
        except (DiagnosticError, ValueError) as err:
            problems.append(Diagnostic("INVALID_MODEL", f"model {model_ref}: {err}", path=str(path)))
    if target is not None and validate:
        params = target.parameters()
        for name in list(overrides) + [f.name for f in factors]:
            if name not in params:
                problems.append(Diagnostic("UNRESOLVED_FACTOR", f"model {model_ref} has no parameter {name}",
                                           path=str(path)))
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(model_ref, target, factors, responses, replications, seed, overrides, str(path))


def _directive(d: Directive) -> tuple[str, object]:
    a = d.args
    if d.keyword == "model":
        if len(a) != 1:
            raise ValueError("model takes one file name")
        return ("model", a[0])
    elif d.keyword == "set":
        if a or not d.options:
            raise ValueError("set takes name=value pairs")
        return ("set", {k: parse_real(v, k) for k, v in d.options.items()})
    elif d.keyword == "factor":
        if len(a) < 2:
            raise ValueError("factor takes a name and at least one level")
        return ("factor", Factor(a[0], tuple(parse_real(x, "level") for x in a[1:])))
    elif d.keyword == "response":
        if len(a) not in (3, 4):
            raise ValueError("response takes <name> <variable> <reducer> [<parameter>]")
        param = parse_real(a[3], "reducer parameter") if len(a) == 4 else None
        return ("response", ResponseSpec(a[0], a[1], a[2], param))
    elif d.keyword in ("replications", "seed"):
        if len(a) != 1 or not a[0].lstrip("-").isdigit():
            raise ValueError(f"{d.keyword} takes one integer")
        n = int(a[0])
        if d.keyword == "replications" and n < 1:
            raise ValueError("replications must be at least 1")
        return (d.keyword, n)
    elif d.keyword == "until":
        if len(a) != 1:
            raise ValueError("until takes one time")
        return ("until", parse_real(a[0], "until"))
    else:
        raise ValueError(f"unknown directive {d.keyword!r}")


def _target(ref: str, base_dir, overrides: dict, until: float):
    if ref == "fms":
        known = {k: v for k, v in overrides.items() if k in FMS_NUMERIC}
        return fms_target(until, known)
    model = load_model(resolve_model(ref, base_dir))
    if isinstance(model, SDModel):
        return SdTarget(model, overrides)
    if overrides:
        raise ValueError("DEVS model files take no parameters")
    return static_target(model, (), until)

