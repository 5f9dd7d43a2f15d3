"""Sentence-based DEVS model dialect.

Atomic models (``.devsnl``) are written as ``!``-terminated sentences::

    A Depth has a value!
    the range of Depth's value is Integer!
    accepts input on FromSensors with type Measure!
    to start hold in s0 for time 1!
    from s0 go to s1!
    passivate in s1!
    when in s1 and receive Measure go to s2!
    after s2 output Measure!

Coupled models (``.devsc``) list components and couplings::

    component mediator from "mediator.devsnl"!
    accepts input on In with type Measure!
    couple self.In to mediator.FromSensors!

``//`` starts a comment running to the end of the line.  Identifiers are
case sensitive; whitespace between tokens is free.  The name after
``receive`` / ``output`` is a port name, or a message type standing for every
port of that type.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..diagnostics import Diagnostic, DiagnosticError, errors
from .model import (
    INFINITY, INPUT, OUTPUT, PRIMITIVES, SELF, AtomicSpec, Branch, Coupling, CoupledSpec,
    DataType, Output, Port, collect_types, validate_atomic, validate_coupled,
)

ATOMIC_SUFFIX = ".devsnl"
COUPLED_SUFFIX = ".devsc"


@dataclass(frozen=True)
class Statement:
    kind: str
    args: tuple
    line: int


@dataclass
class Ast:
    path: str
    statements: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return errors(self.diagnostics)

    @property
    def ok(self) -> bool:
        return not self.errors

    def of_kind(self, kind: str) -> list[Statement]:
        return [s for s in self.statements if s.kind == kind]


class UnrepresentableError(ValueError):
    code = "UNREPRESENTABLE"


# -- lexical layer ----------------------------------------------------------

_ID = r"([A-Za-z_][A-Za-z0-9_]*)"
_NUM = r"([0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?|\.[0-9]+(?:[eE][-+]?[0-9]+)?)"
_PATH = _ID + r"((?:'s\s+[A-Za-z_][A-Za-z0-9_]*)*)"

_PATTERNS = [
    ("RangeDecl", re.compile(rf"the range of {_ID}'s {_ID} is {_ID}")),
    ("UseDecl", re.compile(rf"use {_ID} with type {_ID}")),
    ("InPort", re.compile(rf"accepts input on {_ID} with type {_ID}")),
    ("OutPort", re.compile(rf"generates output on {_ID} with type {_ID}")),
    ("StartHold", re.compile(rf"to start hold in {_ID} for time {_NUM}")),
    ("StartPassivate", re.compile(rf"to start passivate in {_ID}")),
    ("Hold", re.compile(rf"hold in {_ID} for time {_NUM}")),
    ("Passivate", re.compile(rf"passivate in {_ID}")),
    ("InternalGoto", re.compile(rf"from {_ID} go to {_ID}")),
    ("GuardedWhen", re.compile(
        rf"when in {_ID} and receive {_ID} with {_PATH} above (-?{_NUM[1:-1]}) go to {_ID} otherwise go to {_ID}")),
    ("ExternalWhen", re.compile(rf"when in {_ID} and receive {_ID} go to {_ID}")),
    ("AfterOutput", re.compile(rf"after {_ID} output {_ID}")),
    ("Component", re.compile(rf'component {_ID} from "([^"]*)"')),
    ("Coupling", re.compile(rf"couple {_ID}\.{_ID} to {_ID}\.{_ID}")),
    ("TypeDecl", re.compile(rf"(?:(?:A|An) )?{_ID} has (.+)")),
]

_FIELD_ITEM = re.compile(rf"(?:(?:a|an) )?{_ID}")


def _sentences(text: str):
    """Yield ``(line, sentence, terminated)`` with comments removed.

    ``line`` is where the sentence starts; sentences may span lines.
    """
    buf: list[str] = []
    start: Optional[int] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("//", 1)[0].split("!")
        for i, part in enumerate(parts):
            if part.strip():
                if start is None:
                    start = lineno
                buf.append(part)
            if i < len(parts) - 1:
                yield (lineno, "", True) if start is None else (start, " ".join(buf), True)
                buf, start = [], None
    if start is not None:
        yield start, " ".join(buf), False


def _parse_fields(text: str) -> Optional[tuple[str, ...]]:
    parts = [p.strip() for p in re.split(r",|\band\b", text)]
    names = []
    for p in parts:
        m = _FIELD_ITEM.fullmatch(p)
        if not m:
            return None
        names.append(m.group(1))
    return tuple(names)


def _number(text: str) -> float:
    return float(text)


def _match(sentence: str) -> Optional[tuple[str, tuple]]:
    norm = " ".join(sentence.split())
    for kind, pattern in _PATTERNS:
        m = pattern.fullmatch(norm)
        if not m:
            continue
        g = m.groups()
        if kind == "TypeDecl":
            fields = _parse_fields(g[1])
            if fields is None:
                return None
            return kind, (g[0], fields)
        if kind in ("StartHold", "Hold"):
            return kind, (g[0], _number(g[1]))
        if kind == "StartPassivate":
            return "StartHold", (g[0], INFINITY)
        if kind == "GuardedWhen":
            state, port, head, rest, threshold, above, otherwise = g
            path = (head,) + tuple(re.findall(r"'s\s+([A-Za-z_][A-Za-z0-9_]*)", rest))
            return kind, (state, port, path, float(threshold), above, otherwise)
        return kind, tuple(g)
    return None


def parse(text: str, path: str = "<string>") -> Ast:
    """Parse dialect text.  Never raises: problems become diagnostics."""
    ast = Ast(path)
    if not isinstance(text, str):
        text = str(text)
    for line, sentence, terminated in _sentences(text):
        if not sentence.strip():
            ast.diagnostics.append(Diagnostic("SYNTAX_ERROR", "empty sentence", line=line, path=path))
            continue
        if not terminated:
            ast.diagnostics.append(Diagnostic("SYNTAX_ERROR", "sentence is missing its terminal '!'",
                                              line=line, path=path))
            continue
        matched = _match(sentence)
        if matched is None:
            snippet = " ".join(sentence.split())
            if len(snippet) > 60:
                snippet = snippet[:57] + "..."
            ast.diagnostics.append(Diagnostic("SYNTAX_ERROR", f"unrecognised sentence '{snippet}'",
                                              line=line, path=path))
            continue
        kind, args = matched
        ast.statements.append(Statement(kind, args, line))
    if not ast.statements and not ast.errors:
        ast.diagnostics.append(Diagnostic("EMPTY_MODEL", "no statements", severity="warning", line=1, path=path))
    return ast


# -- semantic checks --------------------------------------------------------

_BEHAVIOUR = {"StartHold", "Hold", "Passivate", "InternalGoto", "ExternalWhen", "GuardedWhen", "AfterOutput"}
_COUPLED_ONLY = {"Component", "Coupling"}


@dataclass
class _Resolved:
    types: dict
    variables: dict
    ports: dict
    ta: dict
    start: Optional[str]
    internal: dict
    external: dict
    outputs: dict
    lines: dict


def _resolve(ast: Ast) -> tuple[_Resolved, list[Diagnostic]]:
    diags: list[Diagnostic] = []

    def add(code, message, line, severity="error"):
        diags.append(Diagnostic(code, message, severity, line, path=ast.path))

    fields: dict[str, tuple[tuple[str, ...], int]] = {}
    ranges: dict[tuple[str, str], tuple[str, int]] = {}
    variables: dict[str, str] = {}
    ports: dict[tuple[str, str], tuple[Port, int]] = {}
    lines: dict[str, int] = {}

    for st in ast.statements:
        if st.kind in _COUPLED_ONLY:
            add("COUPLED_STATEMENT", f"{st.kind} sentences belong in a coupled model file", st.line)
        elif st.kind == "TypeDecl":
            name, names = st.args
            if name in fields or name in PRIMITIVES:
                add("DUPLICATE_TYPE", f"type {name} declared twice", st.line)
                continue
            fields[name] = (names, st.line)
            lines.setdefault(name, st.line)
        elif st.kind == "RangeDecl":
            key = (st.args[0], st.args[1])
            if key in ranges and ranges[key][0] != st.args[2]:
                add("CONFLICTING_RANGE", f"{key[0]}'s {key[1]} given two ranges", st.line)
            ranges.setdefault(key, (st.args[2], st.line))
        elif st.kind == "UseDecl":
            if st.args[0] in variables:
                add("DUPLICATE_VARIABLE", f"variable {st.args[0]} declared twice", st.line)
            variables.setdefault(st.args[0], (st.args[1], st.line))
        elif st.kind in ("InPort", "OutPort"):
            direction = INPUT if st.kind == "InPort" else OUTPUT
            key = (direction, st.args[0])
            if key in ports:
                add("DUPLICATE_PORT", f"{direction} port {st.args[0]} declared twice", st.line)
                continue
            ports[key] = (Port(st.args[0], direction, st.args[1]), st.line)
            lines.setdefault(st.args[0], st.line)

    known_types = set(fields) | set(PRIMITIVES)
    for (tname, fname), (rtype, line) in ranges.items():
        if tname not in fields:
            add("UNKNOWN_TYPE", f"range given for undeclared type {tname}", line)
        elif fname not in fields[tname][0]:
            add("UNKNOWN_FIELD", f"type {tname} has no field {fname}", line)
        if rtype not in known_types:
            add("UNKNOWN_TYPE", f"unknown type {rtype}", line)
    types: dict[str, DataType] = {}
    for tname, (names, line) in fields.items():
        typed = []
        for f in names:
            if (tname, f) not in ranges:
                add("UNTYPED_FIELD", f"{tname}'s {f} has no range", line)
            typed.append((f, ranges.get((tname, f), ("Integer", line))[0]))
        types[tname] = DataType(tname, tuple(typed))
    for vname, (vtype, line) in variables.items():
        if vtype not in known_types:
            add("UNKNOWN_TYPE", f"variable {vname} uses unknown type {vtype}", line)
    for (direction, pname), (port, line) in ports.items():
        if port.message_type not in fields:
            add("UNKNOWN_TYPE", f"port {pname} uses unknown type {port.message_type}", line)

    inputs = {p.name: p for (d, _), (p, _) in ports.items() if d == INPUT}
    outputs = {p.name: p for (d, _), (p, _) in ports.items() if d == OUTPUT}

    def resolve_ports(name: str, table: dict, line: int) -> list[str]:
        if name in table:
            return [name]
        by_type = sorted(p.name for p in table.values() if p.message_type == name)
        if not by_type:
            add("UNKNOWN_PORT", f"no {'input' if table is inputs else 'output'} port named or typed {name}", line)
        return by_type

    # states and time advances
    ta: dict[str, float] = {}
    hold_lines: dict[str, int] = {}
    starts = [st for st in ast.statements if st.kind == "StartHold"]
    if not starts and not any(st.kind in _COUPLED_ONLY for st in ast.statements):
        add("NO_START", "no 'to start hold in ...' sentence", ast.statements[-1].line if ast.statements else 1)
    for extra in starts[1:]:
        add("DUPLICATE_START", f"second start sentence (first on line {starts[0].line})", extra.line)
    start = starts[0].args[0] if starts else None
    if starts:
        ta[start] = starts[0].args[1]
        lines.setdefault(start, starts[0].line)
    declared_by_hold: set[str] = set()
    for st in ast.statements:
        if st.kind not in ("Hold", "Passivate"):
            continue
        state = st.args[0]
        t = st.args[1] if st.kind == "Hold" else INFINITY
        lines.setdefault(state, st.line)
        if state in declared_by_hold:
            if ta[state] != t:
                add("CONFLICTING_HOLD", f"state {state} given time advances {ta[state]:g} and {t:g}", st.line)
            else:
                add("DUPLICATE_HOLD", f"state {state} declared again (line {hold_lines[state]})", st.line, "warning")
            continue
        if state in ta and ta[state] != t:
            add("CONFLICTING_HOLD", f"state {state} starts with time {ta[state]:g} but holds for {t:g}", st.line)
            continue
        ta[state] = t
        declared_by_hold.add(state)
        hold_lines[state] = st.line

    internal: dict[str, str] = {}
    external: dict[tuple[str, str], object] = {}
    outs: dict[str, list[Output]] = {}

    def need_state(s: str, line: int) -> bool:
        if s not in ta:
            add("UNKNOWN_STATE", f"state {s} is never given a hold or passivate sentence", line)
            return False
        return True

    for st in ast.statements:
        if st.kind == "InternalGoto":
            a, b = st.args
            ok = need_state(a, st.line) & need_state(b, st.line)
            if ok:
                if a in internal and internal[a] != b:
                    add("CONFLICTING_TRANSITION", f"state {a} goes to both {internal[a]} and {b}", st.line)
                elif a in internal:
                    add("DUPLICATE_TRANSITION", f"transition {a} -> {b} repeated", st.line, "warning")
                else:
                    internal[a] = b
        elif st.kind in ("ExternalWhen", "GuardedWhen"):
            if st.kind == "ExternalWhen":
                s, name, nxt = st.args
                target: object = nxt
                targets = [nxt]
            else:
                s, name, fpath, threshold, above, otherwise = st.args
                target = Branch(tuple(fpath), threshold, above, otherwise)
                targets = [above, otherwise]
            ok = need_state(s, st.line)
            for t in targets:
                ok = need_state(t, st.line) and ok
            for port in resolve_ports(name, inputs, st.line):
                if isinstance(target, Branch):
                    try:
                        _check_field(types, inputs[port].message_type, target.field)
                    except KeyError:
                        add("UNKNOWN_FIELD", f"{inputs[port].message_type} has no numeric field "
                                             f"{' '.join(target.field)}", st.line)
                        ok = False
                if not ok:
                    continue
                key = (s, port)
                if key in external and external[key] != target:
                    add("CONFLICTING_TRANSITION", f"({s}, {port}) has two external transitions", st.line)
                else:
                    external[key] = target
        elif st.kind == "AfterOutput":
            s, name = st.args
            if need_state(s, st.line):
                for port in resolve_ports(name, outputs, st.line):
                    outs.setdefault(s, []).append(Output(port))

    resolved = _Resolved(
        types=types,
        variables={k: v[0] for k, v in variables.items()},
        ports={k: v[0] for k, v in ports.items()},
        ta=ta, start=start, internal=internal, external=external,
        outputs={s: tuple(o) for s, o in outs.items()}, lines=lines,
    )
    return resolved, diags


def _check_field(types: dict, type_name: str, path: tuple) -> None:
    current = type_name
    for name in path:
        if current not in types:
            raise KeyError(name)
        ftype = types[current].field_type(name)
        if ftype is None:
            raise KeyError(name)
        current = ftype
    if current not in ("Integer", "Real"):
        raise KeyError(current)


def _build_spec(resolved: _Resolved, name: str) -> AtomicSpec:
    return AtomicSpec(
        name=name,
        states=frozenset(resolved.ta),
        initial_state=resolved.start,
        ta=dict(resolved.ta),
        internal_transitions=dict(resolved.internal),
        external_transitions=dict(resolved.external),
        outputs=dict(resolved.outputs),
        ports=frozenset(resolved.ports.values()),
        data_types=dict(resolved.types),
        variables=dict(resolved.variables),
    )


def _model_name(path: str) -> str:
    stem = Path(path).stem if path and not path.startswith("<") else "model"
    return stem or "model"


def check(ast: Ast) -> list[Diagnostic]:
    """Resolve names and validate the resulting state machine."""
    resolved, diags = _resolve(ast)
    if errors(diags):
        return diags
    spec = _build_spec(resolved, _model_name(ast.path))
    for d in validate_atomic(spec):
        line = resolved.lines.get(d.element or "")
        diags.append(Diagnostic(d.code, d.message, d.severity, line, d.element, ast.path))
    return diags


def compile(ast: Ast, name: Optional[str] = None) -> AtomicSpec:  # noqa: A001 - mirrors the dialect verb
    """Turn a parsed atomic model into an :class:`AtomicSpec`.

    Raises :class:`DiagnosticError` when parsing or checking found errors.
    """
    problems = errors(ast.diagnostics)
    if problems:
        raise DiagnosticError(problems)
    diags = check(ast)
    if errors(diags):
        raise DiagnosticError(diags)
    resolved, _ = _resolve(ast)
    return _build_spec(resolved, name or _model_name(ast.path))


def compile_text(text: str, name: str = "model") -> AtomicSpec:
    return compile(parse(text), name=name)


# -- pretty printing --------------------------------------------------------

def _fmt_num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _type_order(types: dict) -> list[str]:
    order: list[str] = []

    def visit(name: str) -> None:
        if name in order or name not in types:
            return
        order.append(name)  # placeholder to stop cycles
        for _, ftype in types[name].fields:
            visit(ftype)
        order.remove(name)
        order.append(name)

    for name in sorted(types):
        visit(name)
    return order


def pretty_print(spec: AtomicSpec) -> str:
    """Render an atomic model in the dialect.

    Raises :class:`UnrepresentableError` for per-state output overrides,
    which the dialect cannot express.
    """
    for s, outs in spec.outputs.items():
        for o in outs:
            if o.value is not None:
                raise UnrepresentableError(f"UNREPRESENTABLE: output override on {o.port} in state {s}")
    lines: list[str] = []
    for tname in _type_order(spec.data_types):
        dtype = spec.data_types[tname]
        names = dtype.field_names
        if len(names) == 1:
            lines.append(f"A {tname} has a {names[0]}!")
        else:
            lines.append(f"{tname} has {', '.join(names[:-1])} and {names[-1]}!")
        for fname, ftype in dtype.fields:
            lines.append(f"the range of {tname}'s {fname} is {ftype}!")
    for vname, vtype in sorted(spec.variables.items()):
        lines.append(f"use {vname} with type {vtype}!")
    if lines:
        lines.append("")
    for p in sorted(spec.ports, key=lambda p: (p.direction != INPUT, p.name)):
        verb = "accepts input on" if p.direction == INPUT else "generates output on"
        lines.append(f"{verb} {p.name} with type {p.message_type}!")
    lines.append("")

    def hold(s: str) -> str:
        t = spec.ta[s]
        return f"passivate in {s}!" if t == INFINITY else f"hold in {s} for time {_fmt_num(t)}!"

    init = spec.initial_state
    t0 = spec.ta[init]
    lines.append(f"to start passivate in {init}!" if t0 == INFINITY
                 else f"to start hold in {init} for time {_fmt_num(t0)}!")
    ordered = [init] + sorted(s for s in spec.states if s != init)
    for s in ordered:
        lines.append(hold(s))
        for (es, port), target in sorted(spec.external_transitions.items(), key=lambda kv: kv[0]):
            if es != s:
                continue
            if isinstance(target, Branch):
                fpath = "'s ".join(target.field)
                lines.append(f"when in {s} and receive {port} with {fpath} above {_fmt_num(target.threshold)} "
                             f"go to {target.above} otherwise go to {target.otherwise}!")
            else:
                lines.append(f"when in {s} and receive {port} go to {target}!")
        for o in spec.outputs.get(s, ()):
            lines.append(f"after {s} output {o.port}!")
        if s in spec.internal_transitions:
            lines.append(f"from {s} go to {spec.internal_transitions[s]}!")
    return "\n".join(lines) + "\n"


# -- files ------------------------------------------------------------------

def load_atomic(path: Union[str, os.PathLike]) -> AtomicSpec:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return compile(parse(text, str(path)), name=path.stem)


def check_coupled(ast: Ast, base_dir: Union[str, os.PathLike, None] = None, _stack: tuple = ()) -> tuple[Optional[CoupledSpec], list[Diagnostic]]:
    """Resolve a coupled-model AST, loading component files from ``base_dir``."""
    diags: list[Diagnostic] = []
    base = Path(base_dir) if base_dir is not None else Path(ast.path).parent

    def add(code, message, line, severity="error"):
        diags.append(Diagnostic(code, message, severity, line, path=ast.path))

    children: list[tuple[str, object]] = []
    port_decls: list[tuple[Statement, str]] = []
    couplings: list[tuple[Coupling, int]] = []
    for st in ast.statements:
        if st.kind == "Component":
            name, file = st.args
            if name == SELF:
                add("INVALID_NAME", "'self' is reserved", st.line)
                continue
            if any(n == name for n, _ in children):
                add("DUPLICATE_CHILD", f"component {name} declared twice", st.line)
                continue
            target = (base / file).resolve()
            if target in _stack:
                add("INCLUDE_CYCLE", f"{file} includes itself", st.line)
                continue
            try:
                child = _load_any(target, _stack + (target,))
            except FileNotFoundError:
                add("MISSING_FILE", f"component file {file} not found", st.line)
                continue
            except DiagnosticError as exc:
                for d in exc.diagnostics:
                    add(d.code, f"in {file}: {d.message}", st.line, d.severity)
                continue
            children.append((name, child))
        elif st.kind in ("InPort", "OutPort"):
            port_decls.append((st, INPUT if st.kind == "InPort" else OUTPUT))
        elif st.kind == "Coupling":
            a, p, b, q = st.args
            couplings.append((Coupling(a, p, b, q), st.line))
        elif st.kind in ("TypeDecl", "RangeDecl", "UseDecl") or st.kind in _BEHAVIOUR:
            add("ATOMIC_STATEMENT", f"{st.kind} sentences belong in an atomic model file", st.line)

    if not children and not errors(diags):
        add("EMPTY_MODEL", "coupled model has no components", 1)

    types: dict[str, DataType] = {}
    for cname, child in children:
        for tname, dtype in collect_types(child).items():
            if tname in types and types[tname] != dtype:
                add("TYPE_CONFLICT", f"type {tname} defined differently in {cname}", 1)
            types.setdefault(tname, dtype)
    ports = []
    seen = set()
    for st, direction in port_decls:
        pname, ptype = st.args
        if (direction, pname) in seen:
            add("DUPLICATE_PORT", f"{direction} port {pname} declared twice", st.line)
            continue
        seen.add((direction, pname))
        if ptype not in types:
            add("UNKNOWN_TYPE", f"port {pname} uses unknown type {ptype}", st.line)
        ports.append(Port(pname, direction, ptype))
    if errors(diags):
        return None, diags

    spec = CoupledSpec(_model_name(ast.path), tuple(children), frozenset(ports), tuple(c for c, _ in couplings))
    coupling_lines = {str(c): line for c, line in couplings}
    for d in validate_coupled(spec):
        line = coupling_lines.get(d.element or "")
        if line is None:
            line = next((st.line for st in ast.statements
                         if st.kind == "Component" and (d.element or "").split(".")[0] == st.args[0]), None)
        diags.append(Diagnostic(d.code, d.message, d.severity, line, d.element, ast.path))
    return (None if errors(diags) else spec), diags


def _load_any(path: Path, stack: tuple):
    if path.suffix == COUPLED_SUFFIX:
        ast = parse(path.read_text(encoding="utf-8"), str(path))
        if ast.errors:
            raise DiagnosticError(ast.errors)
        spec, diags = check_coupled(ast, path.parent, stack)
        if spec is None:
            raise DiagnosticError(diags)
        spec.name = path.stem
        return spec
    return load_atomic(path)


def load_coupled(path: Union[str, os.PathLike]) -> CoupledSpec:
    path = Path(path).resolve()
    return _load_any(path, (path,))


def load_devs(path: Union[str, os.PathLike]):
    """Load a ``.devsnl`` or ``.devsc`` file."""
    path = Path(path)
    if path.suffix == COUPLED_SUFFIX:
        return load_coupled(path)
    return load_atomic(path)


def check_file(path: Union[str, os.PathLike]) -> list[Diagnostic]:
    """All diagnostics for a model file (raises ``OSError`` if unreadable)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    ast = parse(text, str(path))
    if ast.errors:
        return ast.diagnostics
    if path.suffix == COUPLED_SUFFIX:
        _, diags = check_coupled(ast, path.parent, (path.resolve(),))
    else:
        diags = check(ast)
    return ast.diagnostics + diags
