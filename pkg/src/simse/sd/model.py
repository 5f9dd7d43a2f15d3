"""Stock-flow model description, static checks and the ``.sd`` file format."""

from __future__ import annotations

import graphlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from ..diagnostics import Diagnostic
from .expr import BUILTIN_NAMES, Expr, ExpressionError, format_number, names, parse_expr, unparse

BOUNDARY = "boundary"
METHODS = ("euler", "rk4")
STEP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Stock:
    name: str
    init: Expr
    nonnegative: bool = False


@dataclass(frozen=True)
class Flow:
    name: str
    source: str
    target: str
    rate: Expr


@dataclass(frozen=True)
class Aux:
    name: str
    expr: Expr


@dataclass(frozen=True)
class TimeSpec:
    start: float = 0.0
    stop: float = 100.0
    dt: float = 0.25
    method: str = "euler"

    def steps(self) -> int:
        return round((self.stop - self.start) / self.dt)


@dataclass
class SDModel:
    name: str
    stocks: list = field(default_factory=list)
    flows: list = field(default_factory=list)
    auxiliaries: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    time: TimeSpec = field(default_factory=TimeSpec)

    def stock(self, name: str, init: Union[str, float], nonnegative: bool = False) -> "SDModel":
        self.stocks.append(Stock(name, parse_expr(init), nonnegative))
        return self

    def flow(self, name: str, source: str, target: str, rate: Union[str, float]) -> "SDModel":
        self.flows.append(Flow(name, source, target, parse_expr(rate)))
        return self

    def aux(self, name: str, expr: Union[str, float]) -> "SDModel":
        self.auxiliaries.append(Aux(name, parse_expr(expr)))
        return self

    def const(self, name: str, value: float) -> "SDModel":
        self.constants[name] = float(value)
        return self

    @property
    def variables(self) -> list[str]:
        """Names recorded in a trajectory: stocks, flows, then auxiliaries."""
        return ([s.name for s in self.stocks] + [f.name for f in self.flows]
                + [a.name for a in self.auxiliaries])

    def expressions(self) -> dict[str, Expr]:
        out = {a.name: a.expr for a in self.auxiliaries}
        out.update({f.name: f.rate for f in self.flows})
        return out


def check_model(model: SDModel) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    all_names = ([s.name for s in model.stocks] + [f.name for f in model.flows]
                 + [a.name for a in model.auxiliaries] + list(model.constants))
    for n in all_names:
        if n in seen:
            diags.append(Diagnostic("DUPLICATE_NAME", f"name {n} declared more than once", element=n))
        if n in BUILTIN_NAMES or n.lower() == BOUNDARY:
            diags.append(Diagnostic("RESERVED_NAME", f"{n} is reserved", element=n))
        seen.add(n)

    ts = model.time
    if not (ts.dt > 0 and math.isfinite(ts.dt)):
        diags.append(Diagnostic("INVALID_TIME", f"dt must be positive, got {ts.dt}"))
    elif not ts.start < ts.stop:
        diags.append(Diagnostic("INVALID_TIME", f"start {ts.start} must be before stop {ts.stop}"))
    else:
        n = (ts.stop - ts.start) / ts.dt
        if abs(n - round(n)) > STEP_TOLERANCE * max(1.0, abs(n)):
            diags.append(Diagnostic("INVALID_TIME", f"(stop - start) / dt = {n} is not a whole number of steps"))
    if ts.method not in METHODS:
        diags.append(Diagnostic("INVALID_TIME", f"unknown method {ts.method}"))

    stocks = {s.name for s in model.stocks}
    for f in model.flows:
        for end in (f.source, f.target):
            if end != BOUNDARY and end not in stocks:
                diags.append(Diagnostic("UNKNOWN_NAME", f"flow {f.name} connects unknown stock {end}", element=f.name))
    for s in model.stocks:
        for ref in sorted(names(s.init) - set(model.constants)):
            diags.append(Diagnostic("UNKNOWN_NAME", f"initial value of {s.name} refers to {ref}; only constants "
                                    "may appear there", element=s.name))
    exprs = model.expressions()
    for n, e in exprs.items():
        for ref in sorted(names(e) - seen):
            diags.append(Diagnostic("UNKNOWN_NAME", f"{n} refers to undeclared {ref}", element=n))

    sorter = graphlib.TopologicalSorter({n: names(e) & exprs.keys() for n, e in exprs.items()})
    try:
        sorter.prepare()
    except graphlib.CycleError as err:
        cycle = err.args[1][:-1]
        diags.append(Diagnostic("ALGEBRAIC_LOOP", "algebraic loop through " + ", ".join(cycle),
                                element=",".join(sorted(cycle))))
    return diags


def eval_order(model: SDModel) -> list[str]:
    """Constants and stocks first, then flows and auxiliaries so that every
    expression follows its dependencies."""
    exprs = model.expressions()
    graph = {n: names(e) & exprs.keys() for n, e in exprs.items()}
    # declaration order as a tie-breaker keeps the result stable
    decl = {n: i for i, n in enumerate(a.name for a in model.auxiliaries)}
    decl.update({f.name: len(decl) + i for i, f in enumerate(model.flows)})
    sorter = graphlib.TopologicalSorter(graph)
    sorter.prepare()
    order: list[str] = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready(), key=decl.__getitem__)
        order.extend(ready)
        sorter.done(*ready)
    return list(model.constants) + [s.name for s in model.stocks] + order


# -- file format ------------------------------------------------------------

class ModelFileError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.format() for d in diagnostics))


def loads(text: str, name: str = "model", path: str | None = None) -> SDModel:
    model = SDModel(name)
    diags: list[Diagnostic] = []
    have_time = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if word == "stock":
                sname, kw, tail = rest.partition(" init ")
                if not kw:
                    raise ValueError("expected 'stock <name> init <expr> [nonneg]'")
                tail = tail.strip()
                nonneg = tail.endswith(" nonneg") or tail == "nonneg"
                if nonneg:
                    tail = tail[: -len("nonneg")].strip()
                model.stock(sname.strip(), tail, nonneg)
            elif word == "flow":
                head, kw, rate = rest.partition(" rate ")
                parts = head.split()
                if not kw or len(parts) != 5 or parts[1] != "from" or parts[3] != "to":
                    raise ValueError("expected 'flow <name> from <stock|boundary> to <stock|boundary> rate <expr>'")
                model.flow(parts[0], parts[2], parts[4], rate)
            elif word in ("aux", "const"):
                vname, eq, value = rest.partition("=")
                if not eq or not vname.strip():
                    raise ValueError(f"expected '{word} <name> = <value>'")
                if word == "aux":
                    model.aux(vname.strip(), value)
                else:
                    model.const(vname.strip(), float(value))
            elif word == "time":
                parts = rest.split()
                if len(parts) != 4:
                    raise ValueError("expected 'time <start> <stop> <dt> <euler|rk4>'")
                model.time = TimeSpec(float(parts[0]), float(parts[1]), float(parts[2]), parts[3])
                have_time = True
            else:
                raise ValueError(f"unknown declaration {word!r}")
        except (ValueError, ExpressionError) as err:
            diags.append(Diagnostic("SYNTAX_ERROR", str(err), line=lineno, path=path))
    if not have_time and not diags:
        diags.append(Diagnostic("INVALID_TIME", "missing 'time' declaration", path=path))
    if diags:
        raise ModelFileError(diags)
    return model


def load(path) -> SDModel:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), path.stem, str(path))


def dumps(model: SDModel) -> str:
    lines = [f"# {model.name}"]
    for n, v in model.constants.items():
        lines.append(f"const {n} = {format_number(v)}")
    for s in model.stocks:
        lines.append(f"stock {s.name} init {unparse(s.init)}" + (" nonneg" if s.nonnegative else ""))
    for f in model.flows:
        lines.append(f"flow {f.name} from {f.source} to {f.target} rate {unparse(f.rate)}")
    for a in model.auxiliaries:
        lines.append(f"aux {a.name} = {unparse(a.expr)}")
    t = model.time
    lines.append(f"time {format_number(t.start)} {format_number(t.stop)} {format_number(t.dt)} {t.method}")
    return "\n".join(lines) + "\n"


def dump(model: SDModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")
