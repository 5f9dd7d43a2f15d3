"""Verification and validation procedures.

Verification checks an implementation against its specification: event
traces are replayed against the atomic state machine that produced them.
Validation compares outputs with reference behaviour: time series against
reference samples, qualitative patterns and extreme-condition runs.  Each
procedure sees only the artefact it judges (a trace or a trajectory), never
the engine internals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .config import ConfigError, Directive, load_config, parse_real
from .devs import (
    INPUT, INTERNAL, OUTPUT, AtomicSpec, Branch, Event, EventTrace, collect_types, default_value,
    read_trace_csv,
)
from .devs import simulate as simulate_devs
from .diagnostics import Diagnostic
from .sd import SDModel, Trajectory, convergence_probe
from .sd import simulate as simulate_sd

VERIFICATION = "verification"
VALIDATION = "validation"
PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
METRICS = ("MAE", "RMSE", "max_abs")
TIME_TOL = 1e-9


class VnVError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class Check:
    name: str
    kind: str
    verdict: str
    metric: str = ""
    value: Optional[float] = None
    threshold: Optional[float] = None
    evidence: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS


@dataclass
class VnVReport:
    checks: list = field(default_factory=list)

    def add(self, check: Check) -> None:
        if any(c.name == check.name for c in self.checks):
            raise ValueError(f"check {check.name} reported twice")
        self.checks.append(check)

    def extend(self, other: "VnVReport") -> None:
        for c in other.checks:
            self.add(c)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            head = f"[{c.verdict.upper():4}] {c.name} ({c.kind})"
            if c.metric:
                head += f" {c.metric}={_num(c.value)}"
                if c.threshold is not None:
                    head += f" threshold={_num(c.threshold)}"
            lines.append(head)
            if c.evidence:
                lines.append(f"       {c.evidence}")
        n_pass = sum(c.passed for c in self.checks)
        lines.append(f"{n_pass}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "kind", "verdict", "metric", "value", "threshold"])
        for c in self.checks:
            w.writerow([c.name, c.kind, c.verdict, c.metric, _num(c.value), _num(c.threshold)])
        return buf.getvalue()


def _num(x) -> str:
    return "" if x is None else "%.9g" % x


# -- metrics ----------------------------------------------------------------

def mae(a, b) -> float:
    return float(np.mean(np.abs(np.asarray(a, float) - np.asarray(b, float))))


def rmse(a, b) -> float:
    return float(np.sqrt(np.mean((np.asarray(a, float) - np.asarray(b, float)) ** 2)))


def max_abs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))))


METRIC_FUNCS = {"MAE": mae, "RMSE": rmse, "max_abs": max_abs}


# -- verification -----------------------------------------------------------

def trace_conformance(spec: AtomicSpec, trace: EventTrace, injections: Sequence[Event] = (),
                      name: str = "trace_conformance", start: float = 0.0) -> Check:
    """Replay ``trace`` against ``spec``.

    Passes when every output is produced by the output function of the state
    the model is in, every internal transition happens exactly ``ta`` after
    the previous transition and follows the transition table, and every
    input is one of ``injections`` handled as the external transition table
    (or the drop rule) says.
    """
    types = collect_types(spec)
    in_ports, out_ports = spec.input_ports(), spec.output_ports()
    for i, e in enumerate(trace):
        if e.component_path:
            raise VnVError("MALFORMED_TRACE", f"event {i} names component {e.path!r}; expected the atomic model")
        if e.direction == OUTPUT and e.port not in out_ports:
            raise VnVError("MALFORMED_TRACE", f"event {i}: {spec.name} has no output port {e.port}")
        if e.direction == INPUT and e.port not in in_ports:
            raise VnVError("MALFORMED_TRACE", f"event {i}: {spec.name} has no input port {e.port}")
        if e.direction not in (INPUT, OUTPUT, INTERNAL):
            raise VnVError("MALFORMED_TRACE", f"event {i}: unknown direction {e.direction}")

    pending = sorted(((ev.time, k, ev) for k, ev in enumerate(injections)), key=lambda x: x[:2])
    pending_i = 0
    state, tl = spec.initial_state, start
    last_received: dict = {}
    emitted: list = []
    prev_time = start

    def fail(i: int, e: Event, why: str) -> Check:
        where = f"event {i} at t={e.time:g} ({e.direction} {e.port or e.note or ''})".replace(" )", ")")
        return Check(name, VERIFICATION, FAIL, evidence=f"{where}: {why}")

    for i, e in enumerate(trace):
        tn = tl + spec.ta[state]
        if e.time < prev_time - TIME_TOL:
            return fail(i, e, f"time goes backwards from {prev_time:g}")
        if e.time > tn + TIME_TOL:
            return fail(i, e, f"missed internal transition of {state} due at t={tn:g}")
        prev_time = e.time
        if e.direction == OUTPUT:
            if abs(e.time - tn) > TIME_TOL:
                return fail(i, e, f"output while in {state}, whose time advance ends at t={tn:g}")
            expected = [o for o in spec.outputs.get(state, ()) if o.port == e.port]
            if not expected:
                return fail(i, e, f"state {state} produces no output on {e.port}")
            ptype = out_ports[e.port].message_type
            want = expected[0].value
            if want is None:
                want = last_received.get(ptype, default_value(ptype, types))
            if e.value != want:
                return fail(i, e, f"value differs from the output of state {state}")
            emitted.append(e.port)
        elif e.direction == INTERNAL:
            if abs(e.time - tn) > TIME_TOL:
                return fail(i, e, f"internal transition at t={e.time:g} but ta({state}) ends at t={tn:g}")
            nxt = spec.internal_transitions[state]
            if e.note and e.note != f"{state}->{nxt}":
                return fail(i, e, f"transition {e.note}; the model goes {state}->{nxt}")
            want_ports = sorted(o.port for o in spec.outputs.get(state, ()))
            if sorted(emitted) != want_ports:
                return fail(i, e, f"outputs {sorted(emitted)} before leaving {state}, expected {want_ports}")
            emitted = []
            state, tl = nxt, e.time
        else:
            if pending_i >= len(pending):
                return fail(i, e, "input that was never injected")
            t_inj, _, inj = pending[pending_i]
            if abs(t_inj - e.time) > TIME_TOL or inj.port != e.port or inj.value != e.value:
                return fail(i, e, f"does not match injection {pending_i} ({inj.port} at t={t_inj:g})")
            pending_i += 1
            if abs(e.time - tn) <= TIME_TOL:
                return fail(i, e, f"input handled before the due internal transition of {state}")
            target = spec.external_transitions.get((state, e.port))
            if target is None:
                if not e.dropped:
                    return fail(i, e, f"state {state} has no transition on {e.port}; input must be dropped")
                continue
            if e.dropped:
                return fail(i, e, f"input dropped although {state} reacts to {e.port}")
            nxt = target.target(e.value) if isinstance(target, Branch) else target
            if e.note and e.note != f"{state}->{nxt}":
                return fail(i, e, f"transition {e.note}; the model goes {state}->{nxt}")
            last_received[e.value.type] = e.value
            state, tl = nxt, e.time
            emitted = []
    end = trace[-1].time if len(trace) else start
    missing = [p for p in pending[pending_i:] if p[0] <= end + TIME_TOL]
    if missing:
        return Check(name, VERIFICATION, FAIL,
                     evidence=f"injection on {missing[0][2].port} at t={missing[0][0]:g} is absent from the trace")
    return Check(name, VERIFICATION, PASS, evidence=f"{len(trace)} events replayed, final state {state}")


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceBehavior:
    variable: str
    times: tuple
    values: tuple
    metric: str = "MAE"
    threshold: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("reference needs equally many times and values (at least one)")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("reference times must be strictly increasing")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric} (expected one of {', '.join(METRICS)})")
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be nonnegative, got {self.threshold}")

    @classmethod
    def from_csv(cls, text: str, variable: str, metric: str = "MAE", threshold: float = 0.0) -> "ReferenceBehavior":
        rows = list(csv.reader(io.StringIO(text)))
        header = rows[0]
        if header[0] != "time" or variable not in header:
            raise ValueError(f"reference file has no time/{variable} columns")
        col = header.index(variable)
        data = [(float(r[0]), float(r[col])) for r in rows[1:] if r]
        return cls(variable, [t for t, _ in data], [v for _, v in data], metric, threshold)


def compare_reference(trajectory: Trajectory, reference: ReferenceBehavior, name: str = "reference") -> Check:
    """Compare samples at reference times; each time snaps to the nearest
    grid point, which must lie within half a step."""
    if reference.variable not in trajectory:
        return Check(name, VALIDATION, INCONCLUSIVE, evidence=f"no variable {reference.variable} in the output")
    half = trajectory.dt / 2 if len(trajectory.times) > 1 else 0.0
    idx = []
    for t in reference.times:
        i = trajectory.index_of(t)
        if abs(trajectory.times[i] - t) > half + TIME_TOL:
            raise VnVError("GRID_MISMATCH", f"reference time {t:g} is more than dt/2 from the output grid")
        idx.append(i)
    sim = trajectory[reference.variable][idx]
    value = METRIC_FUNCS[reference.metric](sim, reference.values)
    worst = int(np.argmax(np.abs(sim - np.array(reference.values))))
    verdict = PASS if value <= reference.threshold else FAIL
    return Check(name, VALIDATION, verdict, reference.metric, value, reference.threshold,
                 f"{len(idx)} points; largest gap at t={reference.times[worst]:g}")


@dataclass(frozen=True)
class PatternSpec:
    """Qualitative behaviour of one variable.

    * ``drop_then_recover``: params ``trigger_time``, ``window``
    * ``monotone``: param ``direction`` ("increasing" or "decreasing"),
      optional ``tolerance``
    * ``continuous_at``: params ``time``, ``jump_tolerance``
    """

    kind: str
    variable: str
    params: Mapping = field(default_factory=dict)

    KINDS = ("drop_then_recover", "monotone", "continuous_at")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown pattern {self.kind}")
        need = {"drop_then_recover": ("trigger_time", "window"), "monotone": ("direction",),
                "continuous_at": ("time", "jump_tolerance")}[self.kind]
        missing = [p for p in need if p not in self.params]
        if missing:
            raise ValueError(f"{self.kind} needs {', '.join(missing)}")


def detect_pattern(trajectory: Trajectory, pattern: PatternSpec, name: Optional[str] = None) -> Check:
    name = name or f"{pattern.kind}:{pattern.variable}"
    if pattern.variable not in trajectory:
        return Check(name, VALIDATION, INCONCLUSIVE, evidence=f"no variable {pattern.variable} in the output")
    t, y = trajectory.times, trajectory[pattern.variable]
    p = pattern.params
    if pattern.kind == "drop_then_recover":
        trig, window = float(p["trigger_time"]), float(p["window"])
        before = np.flatnonzero(t < trig - TIME_TOL)
        if not before.size or trig >= t[-1]:
            return Check(name, VALIDATION, INCONCLUSIVE, evidence=f"trigger {trig:g} outside the run")
        pre = y[before[-1]]
        win = np.flatnonzero((t > trig + TIME_TOL) & (t <= trig + window + TIME_TOL))
        k = win[int(np.argmin(y[win]))]
        dropped = y[k] < pre
        later = np.flatnonzero(y[k:] > pre)
        evidence = f"pre-trigger {pre:.6g}; minimum {y[k]:.6g} at t={t[k]:g}"
        if later.size:
            evidence += f"; exceeds pre-trigger level from t={t[k + later[0]]:g}"
        else:
            evidence += "; never exceeds the pre-trigger level"
        verdict = PASS if dropped and later.size else FAIL
        return Check(name, VALIDATION, verdict, "drop", float(pre - y[k]), 0.0, evidence)
    if pattern.kind == "monotone":
        direction = p["direction"]
        tol = float(p.get("tolerance", 0.0))
        d = np.diff(y) if direction == "increasing" else -np.diff(y)
        worst = int(np.argmin(d)) if d.size else 0
        violation = float(-d[worst]) if d.size and d[worst] < 0 else 0.0
        verdict = PASS if violation <= tol else FAIL
        return Check(name, VALIDATION, verdict, "violation", violation, tol,
                     f"{direction}; worst step at t={t[worst]:g}" if d.size else direction)
    # continuous_at: the steps entering and leaving the grid point nearest to time
    i = trajectory.index_of(float(p["time"]))
    tol = float(p["jump_tolerance"])
    lo, hi = max(i - 1, 0), min(i + 1, len(t) - 1)
    jump = float(np.max(np.abs(np.diff(y[lo:hi + 1])))) if hi > lo else 0.0
    return Check(name, VALIDATION, PASS if jump <= tol else FAIL, "jump", jump, tol,
                 f"largest step change around t={t[i]:g}")


NONNEGATIVE = "nonnegative_stocks"
NO_NUMERIC_ERROR = "no_numeric_error"


def check_invariant(trajectory: Trajectory, invariant: str, stocks: Iterable[str] = ()) -> Optional[str]:
    """Return a violation message or None.

    Invariants: ``nonnegative_stocks``, ``no_numeric_error``,
    ``nonnegative:<var>``, ``at_most:<var>:<bound>``, ``constant:<var>:<tol>``.
    """
    kind, _, rest = invariant.partition(":")
    if kind == NONNEGATIVE:
        for s in stocks:
            if trajectory[s].min() < 0:
                return f"stock {s} goes negative"
        return None
    if kind == NO_NUMERIC_ERROR:
        return None if np.all(np.isfinite(trajectory.values)) else "non-finite values"
    var, _, arg = rest.partition(":")
    if var not in trajectory:
        return f"no variable {var}"
    y = trajectory[var]
    if kind == "nonnegative":
        return None if y.min() >= 0 else f"{var} reaches {y.min():.6g}"
    if kind == "at_most":
        return None if y.max() <= float(arg) else f"{var} reaches {y.max():.6g} > {arg}"
    if kind == "constant":
        spread = float(y.max() - y.min())
        return None if spread <= float(arg) else f"{var} varies by {spread:.6g} > {arg}"
    raise ValueError(f"unknown invariant {invariant!r}")


def extreme_conditions(model: SDModel, corners: Sequence[Mapping[str, float]],
                       assertions: Sequence = (NONNEGATIVE, NO_NUMERIC_ERROR),
                       names: Optional[Sequence[str]] = None) -> VnVReport:
    """Run each corner and check the assertions (invariant names or
    :class:`PatternSpec`).  Failures are reported per corner; a crashing
    corner never stops the others."""
    report = VnVReport()
    stocks = [s.name for s in model.stocks]
    for k, corner in enumerate(corners):
        cname = names[k] if names else "extreme:" + ",".join(f"{a}={v:g}" for a, v in corner.items())
        try:
            traj = simulate_sd(model, corner)
        except Exception as err:
            report.add(Check(cname, VALIDATION, FAIL, evidence=f"run failed: {err}"))
            continue
        problems = []
        for a in list(assertions) or [NONNEGATIVE]:
            if isinstance(a, PatternSpec):
                c = detect_pattern(traj, a)
                if not c.passed:
                    problems.append(f"{c.name}: {c.verdict} ({c.evidence})")
            else:
                msg = check_invariant(traj, a, stocks)
                if msg:
                    problems.append(msg)
        clamps = len(traj.annotations)
        evidence = "; ".join(problems) if problems else f"all assertions hold; {clamps} clamp(s)"
        report.add(Check(cname, VALIDATION, FAIL if problems else PASS, "violations", float(len(problems)), 0.0,
                         evidence))
    return report


def convergence_check(model: SDModel, overrides, variable: str, t_check: float, tolerance: float,
                      name: str = "convergence") -> Check:
    """Relative change of ``variable`` at ``t_check`` when dt is halved."""
    res = convergence_probe(model, overrides, variable, t_check)
    scale = max(abs(res.value_half_dt), 1e-12)
    rel = abs(res.value_dt - res.value_half_dt) / scale
    ratio = "EXACT" if res.exact else f"{res.ratio:.3g}"
    return Check(name, VERIFICATION, PASS if rel <= tolerance else FAIL, "relative_change", rel, tolerance,
                 f"{variable}(t={t_check:g}) = {res.value_dt:.9g} at dt, {res.value_half_dt:.9g} at dt/2; "
                 f"error ratio {ratio}")


# -- suites -----------------------------------------------------------------

@dataclass
class Suite:
    """A named list of checks read from a suite file.

    Directives (``set.<name>=<value>`` options override model constants for
    one check; ``@<var>`` as a time means the final value of that column)::

        suite <name>
        model <file>
        set <name>=<value>...
        reference <check> variable=<v> file=<csv> metric=<MAE|RMSE|max_abs> threshold=<x>
        pattern <check> variable=<v> kind=drop_then_recover trigger=<t|@var> window=<w>
        pattern <check> variable=<v> kind=continuous_at time=<t|@var> tolerance=<x>
        pattern <check> variable=<v> kind=monotone direction=<increasing|decreasing>
        extreme <check> assert=<invariant>[,<invariant>...]
        convergence <check> variable=<v> time=<t> tolerance=<x>
        conformance <check> trace=<csv> injections=<csv>
        regression <check> trace=<csv> injections=<csv> until=<t>
    """

    name: str
    model: Optional[str]
    overrides: dict
    checks: list
    path: Optional[str] = None


_CHECK_OPTIONS = {
    "reference": ({"variable", "file", "metric", "threshold"}, set()),
    "pattern": ({"variable", "kind"}, {"trigger", "window", "time", "tolerance", "direction"}),
    "extreme": (set(), {"assert"}),
    "convergence": ({"variable", "time", "tolerance"}, set()),
    "conformance": ({"trace"}, {"injections"}),
    "regression": ({"trace", "until"}, {"injections"}),
}
SD_CHECKS = {"reference", "pattern", "extreme", "convergence"}


def load_suite(path) -> Suite:
    """Parse a suite file; every problem is collected into one ConfigError."""
    directives = load_config(path)
    problems: list[Diagnostic] = []
    name, model, overrides, checks = Path(path).stem, None, {}, []
    for d in directives:
        try:
            if d.keyword == "suite":
                name = d.args[0]
            elif d.keyword == "model":
                model = d.args[0]
            elif d.keyword == "set":
                overrides.update({k: parse_real(v, k) for k, v in d.options.items()})
            elif d.keyword in _CHECK_OPTIONS:
                _validate_check(d)
                checks.append(d)
            else:
                raise ValueError(f"unknown directive {d.keyword!r}")
        except (ValueError, IndexError) as err:
            problems.append(d.error("SUITE_ERROR", str(err) or f"{d.keyword} needs an argument"))
    names = [d.args[0] for d in checks]
    for dup in sorted({n for n in names if names.count(n) > 1}):
        problems.append(Diagnostic("SUITE_ERROR", f"check {dup} declared twice", path=str(path)))
    if not checks and not problems:
        problems.append(Diagnostic("SUITE_ERROR", "suite has no checks", path=str(path)))
    if problems:
        raise ConfigError(problems)
    return Suite(name, model, overrides, checks, str(path))


def _validate_check(d: Directive) -> None:
    if len(d.args) != 1:
        raise ValueError(f"{d.keyword} takes exactly one check name")
    required, optional = _CHECK_OPTIONS[d.keyword]
    keys = {k for k in d.options if not k.startswith("set.")}
    if required - keys:
        raise ValueError(f"{d.keyword} {d.args[0]} needs {', '.join(sorted(required - keys))}")
    if keys - required - optional:
        raise ValueError(f"{d.keyword} {d.args[0]} does not take {', '.join(sorted(keys - required - optional))}")
    for k, v in d.options.items():
        if k.startswith("set."):
            parse_real(v, k)
    o = d.options
    if d.keyword == "reference":
        if o["metric"] not in METRICS:
            raise ValueError(f"unknown metric {o['metric']}")
        if parse_real(o["threshold"], "threshold") < 0:
            raise ValueError(f"threshold {o['threshold']} can never be met")
    if d.keyword == "convergence" and parse_real(o["tolerance"], "tolerance") < 0:
        raise ValueError(f"tolerance {o['tolerance']} can never be met")
    if d.keyword == "pattern":
        kind = o["kind"]
        need = {"drop_then_recover": {"trigger", "window"}, "continuous_at": {"time", "tolerance"},
                "monotone": {"direction"}}.get(kind)
        if need is None:
            raise ValueError(f"unknown pattern kind {kind}")
        if need - set(o):
            raise ValueError(f"pattern {kind} needs {', '.join(sorted(need - set(o)))}")
        if kind == "monotone" and o["direction"] not in ("increasing", "decreasing"):
            raise ValueError("direction must be increasing or decreasing")
        if "tolerance" in o and parse_real(o["tolerance"], "tolerance") < 0:
            raise ValueError(f"tolerance {o['tolerance']} can never be met")
    if d.keyword == "extreme":
        for inv in o.get("assert", NONNEGATIVE).split(","):
            head = inv.partition(":")[0]
            if head not in (NONNEGATIVE, NO_NUMERIC_ERROR, "nonnegative", "at_most", "constant"):
                raise ValueError(f"unknown invariant {inv}")


def run_suite(model, suite: Suite) -> VnVReport:
    """Execute every check of ``suite`` against ``model``.  A check that
    cannot run is reported as inconclusive or failed, never skipped."""
    report = VnVReport()
    base = Path(suite.path).parent if suite.path else Path(".")
    for d in suite.checks:
        cname = d.args[0]
        kind = VERIFICATION if d.keyword in ("conformance", "regression", "convergence") else VALIDATION
        try:
            if isinstance(model, SDModel) != (d.keyword in SD_CHECKS):
                report.add(Check(cname, kind, INCONCLUSIVE,
                                 evidence=f"{d.keyword} does not apply to this kind of model"))
                continue
            report.add(_run_check(model, suite, d, base))
        except Exception as err:
            code = getattr(err, "code", type(err).__name__)
            report.add(Check(cname, kind, FAIL, evidence=f"{code}: {err}"))
    return report


def _overrides(suite: Suite, d: Directive) -> dict:
    out = dict(suite.overrides)
    out.update({k[4:]: float(v) for k, v in d.options.items() if k.startswith("set.")})
    return out


def _time(text: str, traj: Trajectory) -> float:
    if text.startswith("@"):
        return float(traj[text[1:]][-1])
    return float(text)


def _run_check(model, suite: Suite, d: Directive, base: Path) -> Check:
    cname, o = d.args[0], d.options
    if d.keyword == "reference":
        traj = simulate_sd(model, _overrides(suite, d))
        ref = ReferenceBehavior.from_csv((base / o["file"]).read_text(encoding="utf-8"), o["variable"],
                                         o["metric"], float(o["threshold"]))
        return compare_reference(traj, ref, cname)
    if d.keyword == "pattern":
        traj = simulate_sd(model, _overrides(suite, d))
        kind = o["kind"]
        if kind == "drop_then_recover":
            params = {"trigger_time": _time(o["trigger"], traj), "window": float(o["window"])}
        elif kind == "continuous_at":
            params = {"time": _time(o["time"], traj), "jump_tolerance": float(o["tolerance"])}
        else:
            params = {"direction": o["direction"], "tolerance": float(o.get("tolerance", 0))}
        return detect_pattern(traj, PatternSpec(kind, o["variable"], params), cname)
    if d.keyword == "extreme":
        assertions = o.get("assert", NONNEGATIVE).split(",")
        return extreme_conditions(model, [_overrides(suite, d)], assertions, [cname]).checks[0]
    if d.keyword == "convergence":
        return convergence_check(model, _overrides(suite, d), o["variable"], float(o["time"]),
                                 float(o["tolerance"]), cname)
    types = collect_types(model)
    golden = read_trace_csv((base / o["trace"]).read_text(encoding="utf-8"), types)
    injections = []
    if "injections" in o:
        injections = list(read_trace_csv((base / o["injections"]).read_text(encoding="utf-8"), types))
    if d.keyword == "conformance":
        if not isinstance(model, AtomicSpec):
            return Check(cname, VERIFICATION, INCONCLUSIVE, evidence="conformance replays atomic models only")
        return trace_conformance(model, golden, injections, cname)
    produced = simulate_devs(model, injections, float(o["until"]))
    got = read_trace_csv(produced.to_csv(), types)
    if got == golden:
        return Check(cname, VERIFICATION, PASS, "events", float(len(got)), None, "trace identical to golden file")
    first = next((i for i, (a, b) in enumerate(zip(got, golden)) if a != b), min(len(got), len(golden)))
    return Check(cname, VERIFICATION, FAIL, "events", float(len(got)), None,
                 f"first difference at event {first} ({len(got)} produced, {len(golden)} expected)")
