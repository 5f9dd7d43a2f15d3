"""Classic DEVS model structures.

An atomic model is a labeled state machine: every state has a time advance
(``INFINITY`` marks a passive state), an optional internal successor, external
transitions keyed by ``(state, input port)`` and an ordered list of outputs
emitted just before the internal transition leaves the state.  Coupled models
compose atomic and coupled children through typed port couplings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Union

from ..diagnostics import Diagnostic

INFINITY = math.inf

PRIMITIVES = {"Integer": int, "Real": float, "String": str}

INPUT = "input"
OUTPUT = "output"

SELF = "self"


@dataclass(frozen=True)
class DataType:
    name: str
    fields: tuple[tuple[str, str], ...]

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f for f, _ in self.fields)

    def field_type(self, name: str) -> Optional[str]:
        for fname, ftype in self.fields:
            if fname == name:
                return ftype
        return None


@dataclass(frozen=True)
class Port:
    name: str
    direction: str
    message_type: str


@dataclass(frozen=True, eq=True)
class MessageValue:
    type: str
    payload: Mapping[str, Any]

    def __hash__(self):
        return hash((self.type, canonical_json(self)))

    def get(self, path: Iterable[str]) -> Any:
        """Follow a field path such as ``("depth", "value")``."""
        value: Any = self
        for name in path:
            if not isinstance(value, MessageValue) or name not in value.payload:
                raise KeyError(".".join(path))
            value = value.payload[name]
        return value


@dataclass(frozen=True)
class Output:
    """One emission of the output function.

    ``value=None`` forwards the last message received whose type matches the
    port type; a concrete value overrides forwarding for this state.
    """

    port: str
    value: Optional[MessageValue] = None


@dataclass(frozen=True)
class Branch:
    """Data-dependent external transition: compare a numeric field."""

    field: tuple[str, ...]
    threshold: float
    above: str
    otherwise: str

    def target(self, value: MessageValue) -> str:
        return self.above if float(value.get(self.field)) > self.threshold else self.otherwise


Target = Union[str, Branch]


@dataclass
class AtomicSpec:
    name: str
    states: frozenset
    initial_state: str
    ta: dict
    internal_transitions: dict
    external_transitions: dict
    outputs: dict
    ports: frozenset
    data_types: dict
    variables: dict = field(default_factory=dict)

    def input_ports(self) -> dict[str, Port]:
        return {p.name: p for p in self.ports if p.direction == INPUT}

    def output_ports(self) -> dict[str, Port]:
        return {p.name: p for p in self.ports if p.direction == OUTPUT}

    def is_passive(self, state: str) -> bool:
        return self.ta.get(state) == INFINITY


@dataclass(frozen=True)
class Coupling:
    source: str
    source_port: str
    target: str
    target_port: str

    @property
    def kind(self) -> str:
        if self.source == SELF:
            return "EIC"
        if self.target == SELF:
            return "EOC"
        return "IC"

    def __str__(self) -> str:
        return f"{self.source}.{self.source_port} -> {self.target}.{self.target_port}"


@dataclass
class CoupledSpec:
    name: str
    children: tuple
    ports: frozenset
    couplings: tuple

    def child(self, name: str):
        for cname, spec in self.children:
            if cname == name:
                return spec
        return None

    def input_ports(self) -> dict[str, Port]:
        return {p.name: p for p in self.ports if p.direction == INPUT}

    def output_ports(self) -> dict[str, Port]:
        return {p.name: p for p in self.ports if p.direction == OUTPUT}


ModelSpec = Union[AtomicSpec, CoupledSpec]


def collect_types(spec: ModelSpec) -> dict[str, DataType]:
    """Every data type declared anywhere below ``spec``."""
    if isinstance(spec, AtomicSpec):
        return dict(spec.data_types)
    types: dict[str, DataType] = {}
    for _, child in spec.children:
        types.update(collect_types(child))
    return types


# -- message values ---------------------------------------------------------

def default_value(type_name: str, types: Mapping[str, DataType]) -> Any:
    if type_name in PRIMITIVES:
        return PRIMITIVES[type_name]()
    dtype = types[type_name]
    return MessageValue(type_name, {f: default_value(t, types) for f, t in dtype.fields})


def conformance_error(value: Any, type_name: str, types: Mapping[str, DataType]) -> Optional[str]:
    """Return a reason string when ``value`` does not conform to ``type_name``."""
    if type_name in PRIMITIVES:
        if type_name == "Integer":
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif type_name == "Real":
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        else:
            ok = isinstance(value, str)
        return None if ok else f"{value!r} is not {type_name}"
    if not isinstance(value, MessageValue):
        return f"{value!r} is not a {type_name} message"
    if value.type != type_name:
        return f"expected {type_name}, got {value.type}"
    dtype = types.get(type_name)
    if dtype is None:
        return f"unknown type {type_name}"
    if set(value.payload) != set(dtype.field_names):
        return f"{type_name} fields {sorted(dtype.field_names)} != {sorted(value.payload)}"
    for fname, ftype in dtype.fields:
        reason = conformance_error(value.payload[fname], ftype, types)
        if reason:
            return f"{type_name}.{fname}: {reason}"
    return None


def to_json(value: Any) -> Any:
    if isinstance(value, MessageValue):
        return {k: to_json(v) for k, v in value.payload.items()}
    return value


def canonical_json(value: Any) -> str:
    """Key-sorted, whitespace-free JSON rendering of a message."""
    return json.dumps(to_json(value), sort_keys=True, separators=(",", ":"))


def from_json(type_name: str, obj: Any, types: Mapping[str, DataType]) -> Any:
    """Build a (possibly nested) message of ``type_name`` from plain JSON data."""
    if type_name in PRIMITIVES:
        if type_name == "Real" and isinstance(obj, int):
            return float(obj)
        return obj
    dtype = types.get(type_name)
    if dtype is None:
        raise KeyError(f"unknown type {type_name}")
    if not isinstance(obj, Mapping):
        raise ValueError(f"{type_name} payload must be an object")
    unknown = set(obj) - set(dtype.field_names)
    if unknown:
        raise ValueError(f"{type_name} has no field(s) {sorted(unknown)}")
    payload = {}
    for fname, ftype in dtype.fields:
        payload[fname] = from_json(ftype, obj[fname], types) if fname in obj else default_value(ftype, types)
    return MessageValue(type_name, payload)


# -- validation -------------------------------------------------------------

def _type_diagnostics(types: Mapping[str, DataType]) -> list[Diagnostic]:
    diags = []
    for dtype in types.values():
        names = dtype.field_names
        for dup in sorted({n for n in names if names.count(n) > 1}):
            diags.append(Diagnostic("DUPLICATE_FIELD", f"{dtype.name} declares field {dup} twice",
                                    element=dtype.name))
        for fname, ftype in dtype.fields:
            if ftype not in PRIMITIVES and ftype not in types:
                diags.append(Diagnostic("UNKNOWN_TYPE", f"{dtype.name}.{fname} has unknown type {ftype}",
                                        element=dtype.name))
    # composition cycles
    state: dict[str, int] = {}

    def visit(name: str, stack: list[str]) -> None:
        state[name] = 1
        for _, ftype in types[name].fields:
            if ftype not in types:
                continue
            if state.get(ftype) == 1:
                cycle = stack[stack.index(ftype):] + [ftype]
                diags.append(Diagnostic("CYCLIC_TYPE", "type cycle " + " -> ".join(cycle), element=ftype))
            elif ftype not in state:
                visit(ftype, stack + [ftype])
        state[name] = 2

    for name in sorted(types):
        if name not in state:
            visit(name, [name])
    return diags


def validate_atomic(spec: AtomicSpec) -> list[Diagnostic]:
    """Check the structural invariants of an atomic model.

    Returns an empty list when the model is well formed.
    """
    diags: list[Diagnostic] = []

    def add(code: str, message: str, element: str) -> None:
        diags.append(Diagnostic(code, message, element=element))

    states = spec.states
    if spec.initial_state not in states:
        add("UNKNOWN_STATE", f"initial state {spec.initial_state} is not a declared state", spec.initial_state)
    for s in sorted(states):
        if s not in spec.ta:
            add("MISSING_TA", f"state {s} has no time advance", s)
    for s, t in sorted(spec.ta.items()):
        if s not in states:
            add("UNKNOWN_STATE", f"time advance given for unknown state {s}", s)
        elif not (t >= 0):
            add("NEGATIVE_TA", f"time advance of {s} must be >= 0, got {t}", s)

    diags.extend(_type_diagnostics(spec.data_types))

    seen: dict[tuple[str, str], Port] = {}
    for p in sorted(spec.ports, key=lambda p: (p.direction, p.name, p.message_type)):
        key = (p.direction, p.name)
        if key in seen:
            add("DUPLICATE_PORT", f"{p.direction} port {p.name} declared twice", p.name)
        seen[key] = p
        if p.direction not in (INPUT, OUTPUT):
            add("BAD_DIRECTION", f"port {p.name} has direction {p.direction}", p.name)
        if p.message_type not in spec.data_types:
            add("UNKNOWN_TYPE", f"port {p.name} carries unknown type {p.message_type}", p.name)
    inputs = spec.input_ports()
    outputs = spec.output_ports()

    for s, nxt in sorted(spec.internal_transitions.items()):
        if s not in states:
            add("UNKNOWN_STATE", f"internal transition from unknown state {s}", s)
            continue
        if nxt not in states:
            add("UNKNOWN_STATE", f"internal transition {s} -> unknown state {nxt}", nxt)
        if spec.is_passive(s):
            add("PASSIVE_INTERNAL", f"passive state {s} cannot have an internal transition", s)
    for s in sorted(states):
        t = spec.ta.get(s)
        if t is not None and t != INFINITY and s not in spec.internal_transitions:
            add("MISSING_INTERNAL", f"state {s} holds for {t:g} but has no internal transition", s)

    for (s, port), target in sorted(spec.external_transitions.items(), key=lambda kv: kv[0]):
        if s not in states:
            add("UNKNOWN_STATE", f"external transition from unknown state {s}", s)
        if port not in inputs:
            add("UNKNOWN_PORT", f"external transition on undeclared input port {port}", port)
        targets = [target.above, target.otherwise] if isinstance(target, Branch) else [target]
        for t in targets:
            if t not in states:
                add("UNKNOWN_STATE", f"external transition ({s}, {port}) -> unknown state {t}", t)
        if isinstance(target, Branch) and port in inputs:
            try:
                _field_type(spec.data_types, inputs[port].message_type, target.field)
            except KeyError:
                add("UNKNOWN_FIELD", f"{inputs[port].message_type} has no field {'.'.join(target.field)}", port)

    for s, outs in sorted(spec.outputs.items()):
        if s not in states:
            add("UNKNOWN_STATE", f"output declared for unknown state {s}", s)
        elif spec.is_passive(s):
            add("PASSIVE_OUTPUT", f"passive state {s} can never emit output", s)
        for out in outs:
            if out.port not in outputs:
                add("UNKNOWN_PORT", f"output on undeclared output port {out.port}", out.port)
            elif out.value is not None:
                reason = conformance_error(out.value, outputs[out.port].message_type, spec.data_types)
                if reason:
                    add("TYPE_MISMATCH", f"override on {out.port}: {reason}", out.port)
    return diags


def _field_type(types: Mapping[str, DataType], type_name: str, path: tuple[str, ...]) -> str:
    current = type_name
    for name in path:
        dtype = types[current]
        ftype = dtype.field_type(name)
        if ftype is None:
            raise KeyError(name)
        current = ftype
    if current not in ("Integer", "Real"):
        raise KeyError(".".join(path))
    return current


def validate_coupled(spec: CoupledSpec) -> list[Diagnostic]:
    """Check a coupled model and, recursively, all of its children."""
    diags: list[Diagnostic] = []

    def add(code: str, message: str, element: str) -> None:
        diags.append(Diagnostic(code, message, element=element))

    names = [n for n, _ in spec.children]
    for dup in sorted({n for n in names if names.count(n) > 1}):
        add("DUPLICATE_CHILD", f"child {dup} declared twice", dup)
    for n in names:
        # dotted names come from flattening: every segment must be a plain name
        if n == SELF or not all(n.split(".")):
            add("INVALID_NAME", f"child name {n!r} is not allowed", n)

    for cname, child in spec.children:
        sub = validate_atomic(child) if isinstance(child, AtomicSpec) else validate_coupled(child)
        for d in sub:
            diags.append(Diagnostic(d.code, f"{cname}: {d.message}", d.severity, d.line,
                                    f"{cname}.{d.element}" if d.element else cname))

    types = collect_types(spec)
    for p in spec.ports:
        if p.message_type not in types:
            add("UNKNOWN_TYPE", f"port {p.name} carries unknown type {p.message_type}", p.name)

    def endpoint(comp: str, port: str, want: str) -> Optional[Port]:
        if comp == SELF:
            # parent inputs act as sources, parent outputs as destinations
            table = spec.input_ports() if want == OUTPUT else spec.output_ports()
        else:
            child = spec.child(comp)
            if child is None:
                add("UNKNOWN_COMPONENT", f"coupling references unknown component {comp}", comp)
                return None
            table = child.output_ports() if want == OUTPUT else child.input_ports()
        if port not in table:
            other = (child_ports(comp, INPUT if want == OUTPUT else OUTPUT))
            if port in other:
                add("DIRECTION_MISMATCH", f"{comp}.{port} has the wrong direction for this coupling", port)
            else:
                add("UNKNOWN_PORT", f"{comp} has no port {port}", port)
            return None
        return table[port]

    def child_ports(comp: str, direction: str) -> dict[str, Port]:
        if comp == SELF:
            return spec.output_ports() if direction == INPUT else spec.input_ports()
        child = spec.child(comp)
        if child is None:
            return {}
        return child.input_ports() if direction == INPUT else child.output_ports()

    seen = set()
    for c in spec.couplings:
        if c in seen:
            add("DUPLICATE_COUPLING", f"coupling {c} declared twice", str(c))
        seen.add(c)
        if c.source == SELF and c.target == SELF:
            add("DIRECT_FEEDTHROUGH", f"coupling {c} connects a parent input straight to a parent output", str(c))
            continue
        if c.source == c.target:
            add("SELF_LOOP", f"coupling {c} feeds a component back into itself", str(c))
        src = endpoint(c.source, c.source_port, OUTPUT)
        dst = endpoint(c.target, c.target_port, INPUT)
        if src is not None and dst is not None and src.message_type != dst.message_type:
            add("TYPE_MISMATCH", f"coupling {c} joins {src.message_type} to {dst.message_type}", str(c))
    return diags


def validate(spec: ModelSpec) -> list[Diagnostic]:
    return validate_atomic(spec) if isinstance(spec, AtomicSpec) else validate_coupled(spec)
