"""Fixed-step integration of stock-flow models.

Every row of a trajectory holds the stocks at grid time ``t`` together with
the flows and auxiliaries evaluated from them.  Euler uses exactly those
rates for the step to ``t + dt``; RK4 uses them as its first slope.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ..diagnostics import DiagnosticError, errors
from .expr import LatchState, compile_expr
from .model import BOUNDARY, SDModel, TimeSpec, check_model, eval_order


class SDError(Exception):
    def __init__(self, code: str, message: str, time: Optional[float] = None, variable: Optional[str] = None):
        self.code = code
        self.time = time
        self.variable = variable
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class Annotation:
    time: float
    variable: str
    code: str
    message: str = ""


@dataclass
class Trajectory:
    variables: list
    times: np.ndarray
    values: np.ndarray
    annotations: list = field(default_factory=list)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[:, self.variables.index(name)]

    def __contains__(self, name: str) -> bool:
        return name in self.variables

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def index_of(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def value_at(self, name: str, t: float) -> float:
        return float(self[name][self.index_of(t)])

    def to_csv(self, variables=None) -> str:
        cols = list(variables or self.variables)
        idx = [self.variables.index(c) for c in cols]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time"] + cols)
        for t, row in zip(self.times, self.values):
            writer.writerow(["%.9g" % t] + ["%.9g" % row[i] for i in idx])
        return buf.getvalue()


class _Compiled:
    """Model expressions compiled once per run (latch state is per run)."""

    def __init__(self, model: SDModel, constants: dict):
        self.latch = LatchState()
        keys: list = []
        exprs = model.expressions()
        self.order = [n for n in eval_order(model) if n in exprs]
        self.funcs = [(n, compile_expr(exprs[n], self.latch, keys)) for n in self.order]
        self.constants = constants
        self.stocks = [s.name for s in model.stocks]
        self.flows = [(f.name, f.source, f.target) for f in model.flows]

    def evaluate(self, stocks: np.ndarray, t: float, g: float, dt: float, update: bool) -> dict:
        v = dict(self.constants)
        v.update(zip(self.stocks, stocks.tolist()))
        self.latch.update = update
        for name, fn in self.funcs:
            try:
                x = fn(v, t, g, dt)
            except ZeroDivisionError:
                raise SDError("NUMERIC_ERROR", f"division by zero in {name} at t={t:g}", t, name) from None
            except OverflowError:
                raise SDError("NUMERIC_ERROR", f"overflow in {name} at t={t:g}", t, name) from None
            if not math.isfinite(x):
                raise SDError("NUMERIC_ERROR", f"{name} is {x} at t={t:g}", t, name)
            v[name] = float(x)
        return v

    def derivative(self, v: dict) -> np.ndarray:
        d = np.zeros(len(self.stocks))
        index = {n: i for i, n in enumerate(self.stocks)}
        for name, src, dst in self.flows:
            rate = v[name]
            if src != BOUNDARY:
                d[index[src]] -= rate
            if dst != BOUNDARY:
                d[index[dst]] += rate
        return d


def initial_values(model: SDModel, overrides: Optional[Mapping[str, float]] = None) -> np.ndarray:
    """Initial stock values, honouring constant and stock overrides."""
    overrides = dict(overrides or {})
    constants = {k: float(overrides.get(k, v)) for k, v in model.constants.items()}
    return _initial(model, constants, overrides)


def _initial(model: SDModel, constants: dict, overrides: Mapping) -> np.ndarray:
    out = []
    for s in model.stocks:
        if s.name in overrides:
            out.append(float(overrides[s.name]))
        else:
            out.append(float(compile_expr(s.init, LatchState(), [])(constants, model.time.start,
                                                                     model.time.start, model.time.dt)))
    return np.array(out, dtype=float)


def simulate(model: SDModel, overrides: Optional[Mapping[str, float]] = None, *, dt: Optional[float] = None,
             method: Optional[str] = None, stop: Optional[float] = None) -> Trajectory:
    """Integrate ``model`` over its time span.

    ``overrides`` may name constants or stocks (replacing the initial value).
    ``dt``, ``method`` and ``stop`` replace the model's own time settings.
    """
    overrides = dict(overrides or {})
    ts = model.time
    ts = TimeSpec(ts.start, ts.stop if stop is None else stop, ts.dt if dt is None else dt,
                  ts.method if method is None else method)
    run_model = SDModel(model.name, model.stocks, model.flows, model.auxiliaries, model.constants, ts)
    diags = errors(check_model(run_model))
    if diags:
        raise DiagnosticError(diags)
    stock_names = {s.name for s in model.stocks}
    unknown = sorted(k for k in overrides if k not in model.constants and k not in stock_names)
    if unknown:
        raise SDError("OVERRIDE_UNKNOWN", f"no constant or stock named {', '.join(unknown)}")

    constants = {k: float(overrides.get(k, v)) for k, v in model.constants.items()}
    comp = _Compiled(run_model, constants)
    steps = ts.steps()
    times = ts.start + np.arange(steps + 1) * ts.dt
    variables = run_model.variables
    values = np.empty((steps + 1, len(variables)))
    annotations: list[Annotation] = []
    nonneg = [i for i, s in enumerate(model.stocks) if s.nonnegative]
    h = ts.dt

    x = _initial(run_model, constants, overrides)
    for i in range(steps + 1):
        t = float(times[i])
        v = comp.evaluate(x, t, t, h, update=True)
        values[i] = [v[n] for n in variables]
        if i == steps:
            break
        k1 = comp.derivative(v)
        if ts.method == "euler":
            x = x + h * k1
        else:
            k2 = comp.derivative(comp.evaluate(x + h / 2 * k1, t + h / 2, t, h, update=False))
            k3 = comp.derivative(comp.evaluate(x + h / 2 * k2, t + h / 2, t, h, update=False))
            k4 = comp.derivative(comp.evaluate(x + h * k3, t + h, t, h, update=False))
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            bad = model.stocks[int(np.flatnonzero(~np.isfinite(x))[0])].name
            raise SDError("NUMERIC_ERROR", f"stock {bad} is not finite at t={float(times[i + 1]):g}",
                          float(times[i + 1]), bad)
        for j in nonneg:
            if x[j] < 0:
                annotations.append(Annotation(float(times[i + 1]), model.stocks[j].name, "CLAMPED",
                                              f"{x[j]:.9g} clamped to 0"))
                x[j] = 0.0
    return Trajectory(variables, times, values, annotations)


@dataclass(frozen=True)
class ConvergenceResult:
    value_dt: float
    value_half_dt: float
    value_quarter_dt: float
    ratio: Optional[float]

    @property
    def exact(self) -> bool:
        return self.ratio is None


def convergence_probe(model: SDModel, overrides=None, variable: str = "", t_check: float = 0.0,
                      dt: Optional[float] = None, method: Optional[str] = None) -> ConvergenceResult:
    """Run at ``dt``, ``dt/2`` and ``dt/4`` and estimate the observed order.

    The ratio is ``|v(dt) - v(dt/2)| / |v(dt/2) - v(dt/4)|``, about 2 for a
    first-order method.  It is ``None`` (reported as EXACT) when the runs
    agree exactly.
    """
    h = model.time.dt if dt is None else dt
    vals = [simulate(model, overrides, dt=h / k, method=method).value_at(variable, t_check) for k in (1, 2, 4)]
    d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
    ratio = None if d1 == 0 and d2 == 0 else (math.inf if d2 == 0 else d1 / d2)
    return ConvergenceResult(vals[0], vals[1], vals[2], ratio)
