"""Hierarchical classic-DEVS simulator.

Each atomic model is driven by a leaf simulator, each coupled model by a
coordinator that routes messages through its couplings.  Ordering rules:

* simultaneous imminent components fire in child declaration order
  (depth first through the hierarchy);
* a component that is imminent when an input reaches it performs its
  internal transition first and then the external one with elapsed time 0;
* an input with no matching external transition is dropped and recorded
  with a ``DROPPED`` note;
* several inputs reaching one component at the same instant are delivered
  one at a time, in injection / coupling order.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from typing import Iterator, Optional, Union

from ..diagnostics import DiagnosticError, errors
from .model import (
    INFINITY, INPUT, OUTPUT, SELF, AtomicSpec, Branch, CoupledSpec, ModelSpec,
    collect_types, conformance_error, default_value, validate,
)
from .trace import DROPPED, INTERNAL, Event, EventTrace

DEFAULT_LIVELOCK_BOUND = 1_000_000


class SimulationError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class _Leaf:
    def __init__(self, spec: AtomicSpec, path: tuple, parent: Optional["_Coordinator"]):
        self.spec = spec
        self.path = path
        self.name = path[-1] if path else spec.name
        self.parent = parent
        self.state = spec.initial_state
        self.tl = 0.0
        self.tn = INFINITY
        self.last_received: dict = {}

    def start(self, t: float) -> None:
        self.enter(self.spec.initial_state, t)

    def enter(self, state: str, t: float) -> None:
        self.state = state
        self.tl = t
        self.tn = t + self.spec.ta[state]

    def imminent(self, t: float) -> "_Leaf":
        return self

    def receivers(self, port: str) -> Iterator[tuple]:
        yield self, port

    def leaves(self) -> Iterator["_Leaf"]:
        yield self


class _Coordinator:
    def __init__(self, spec: CoupledSpec, path: tuple, parent: Optional["_Coordinator"]):
        self.spec = spec
        self.path = path
        self.name = path[-1] if path else spec.name
        self.parent = parent
        self.children = [(n, _build(c, path + (n,), self)) for n, c in spec.children]
        self.index = dict(self.children)
        self.routes: dict[tuple, list] = {}
        for c in spec.couplings:
            self.routes.setdefault((c.source, c.source_port), []).append(c)

    @property
    def tn(self) -> float:
        return min((c.tn for _, c in self.children), default=INFINITY)

    def start(self, t: float) -> None:
        for _, c in self.children:
            c.start(t)

    def imminent(self, t: float) -> _Leaf:
        for _, c in self.children:
            if c.tn == t:
                return c.imminent(t)
        raise AssertionError("no imminent child")

    def receivers(self, port: str) -> Iterator[tuple]:
        for c in self.routes.get((SELF, port), ()):
            yield from self.index[c.target].receivers(c.target_port)

    def destinations(self, child: str, port: str) -> Iterator[tuple]:
        """Where an output of ``child`` ends up: ``(leaf, port)`` pairs, or
        ``(None, port)`` for an output port of the root model."""
        for c in self.routes.get((child, port), ()):
            if c.target == SELF:
                if self.parent is None:
                    yield None, c.target_port
                else:
                    yield from self.parent.destinations(self.name, c.target_port)
            else:
                yield from self.index[c.target].receivers(c.target_port)

    def leaves(self) -> Iterator[_Leaf]:
        for _, c in self.children:
            yield from c.leaves()


def _build(spec: ModelSpec, path: tuple, parent) -> Union[_Leaf, _Coordinator]:
    if isinstance(spec, AtomicSpec):
        return _Leaf(spec, path, parent)
    return _Coordinator(spec, path, parent)


class SimulatorState:
    """Mutable simulation state for one model; not thread safe."""

    def __init__(self, spec: ModelSpec, start: float = 0.0, livelock_bound: int = DEFAULT_LIVELOCK_BOUND):
        diags = errors(validate(spec))
        if diags:
            raise DiagnosticError(diags, f"invalid model {spec.name}: "
                                  + "; ".join(f"{d.code}: {d.message}" for d in diags))
        if not start >= 0 or start == INFINITY:
            raise SimulationError("BAD_TIME", f"start time must be finite and >= 0, got {start}")
        self.spec = spec
        self.types = collect_types(spec)
        self.clock = float(start)
        self.livelock_bound = livelock_bound
        self.root = _build(spec, (), None)
        self.root.start(self.clock)
        self._pending: list = []
        self._seq = itertools.count()

    # -- queries ------------------------------------------------------------

    def next_event_time(self) -> float:
        t = self.root.tn
        if self._pending:
            t = min(t, self._pending[0][0])
        return t

    def component(self, path) -> Union[_Leaf, _Coordinator]:
        node = self.root
        if isinstance(path, str) and isinstance(node, _Coordinator) and path in node.index:
            return node.index[path]  # leaf of a flattened model
        for name in _as_path(path):
            if not isinstance(node, _Coordinator) or name not in node.index:
                raise SimulationError("UNKNOWN_TARGET", f"no component {'.'.join(_as_path(path))}")
            node = node.index[name]
        return node

    def state_of(self, path=()) -> str:
        node = self.component(path)
        if not isinstance(node, _Leaf):
            raise SimulationError("UNKNOWN_TARGET", "state_of needs an atomic component")
        return node.state

    # -- stimuli ------------------------------------------------------------

    def inject(self, event: Event) -> "SimulatorState":
        if event.time < self.clock:
            raise SimulationError("PAST_EVENT", f"event at {event.time} is before the clock {self.clock}")
        if event.time == INFINITY:
            raise SimulationError("PAST_EVENT", "cannot inject an event at infinity")
        try:
            node = self.component(event.component_path)
        except SimulationError:
            raise
        port = node.spec.input_ports().get(event.port)
        if port is None or event.direction != INPUT:
            raise SimulationError("UNKNOWN_TARGET", f"{'.'.join(event.component_path) or node.name} "
                                                    f"has no input port {event.port}")
        reason = conformance_error(event.value, port.message_type, self.types)
        if reason:
            raise SimulationError("TYPE_MISMATCH", f"port {event.port}: {reason}")
        heapq.heappush(self._pending, (event.time, next(self._seq), event))
        return self

    # -- execution ----------------------------------------------------------

    def advance(self, until: float) -> EventTrace:
        if until < self.clock:
            raise SimulationError("PAST_EVENT", f"cannot advance to {until}, clock is {self.clock}")
        trace: list[Event] = []
        instant, steps = None, 0
        while True:
            t_int = self.root.tn
            t_ext = self._pending[0][0] if self._pending else INFINITY
            t = min(t_int, t_ext)
            if t > until or t == INFINITY:
                break
            if t != instant:
                instant, steps = t, 0
            self.clock = t
            queue: deque = deque()
            if t_int <= t_ext:
                self._fire(self.root.imminent(t), t, trace, queue)
            else:
                _, _, event = heapq.heappop(self._pending)
                self._inject_now(event, t, trace, queue)
            steps += 1
            while queue:
                leaf, port, value = queue.popleft()
                steps += self._deliver(leaf, port, value, t, trace, queue)
                if steps > self.livelock_bound:
                    break
            if steps > self.livelock_bound:
                raise SimulationError("LIVELOCK", f"more than {self.livelock_bound} zero-time steps at t={t}")
        if until != INFINITY:
            self.clock = float(until)
        return EventTrace(trace)

    def _inject_now(self, event: Event, t: float, trace: list, queue: deque) -> None:
        node = self.component(event.component_path)
        if isinstance(node, _Leaf):
            queue.append((node, event.port, event.value))
            return
        trace.append(Event(t, node.path, event.port, INPUT, event.value))
        for leaf, port in _unique(node.receivers(event.port)):
            queue.append((leaf, port, event.value))

    def _fire(self, leaf: _Leaf, t: float, trace: list, queue: deque) -> None:
        spec = leaf.spec
        state = leaf.state
        out_ports = spec.output_ports()
        for out in spec.outputs.get(state, ()):
            ptype = out_ports[out.port].message_type
            value = out.value
            if value is None:
                value = leaf.last_received.get(ptype)
            if value is None:
                value = default_value(ptype, spec.data_types)
            trace.append(Event(t, leaf.path, out.port, OUTPUT, value))
            if leaf.parent is None:
                continue
            for dest, port in _unique(leaf.parent.destinations(leaf.name, out.port)):
                if dest is None:
                    trace.append(Event(t, (), port, OUTPUT, value))
                else:
                    queue.append((dest, port, value))
        nxt = spec.internal_transitions[state]
        trace.append(Event(t, leaf.path, "", INTERNAL, None, f"{state}->{nxt}"))
        leaf.enter(nxt, t)

    def _deliver(self, leaf: _Leaf, port: str, value, t: float, trace: list, queue: deque) -> int:
        steps = 1
        if leaf.tn == t:
            self._fire(leaf, t, trace, queue)
            steps += 1
        state = leaf.state
        target = leaf.spec.external_transitions.get((state, port))
        if target is None:
            trace.append(Event(t, leaf.path, port, INPUT, value, DROPPED))
            return steps
        nxt = target.target(value) if isinstance(target, Branch) else target
        leaf.last_received[value.type] = value
        trace.append(Event(t, leaf.path, port, INPUT, value, f"{state}->{nxt}"))
        leaf.enter(nxt, t)
        return steps


def _as_path(path) -> tuple:
    if isinstance(path, str):
        return tuple(path.split(".")) if path else ()
    return tuple(path)


def _unique(pairs) -> list:
    seen, out = set(), []
    for leaf, port in pairs:
        key = (id(leaf), port)
        if key not in seen:
            seen.add(key)
            out.append((leaf, port))
    return out


# -- functional interface ---------------------------------------------------

def init_simulator(spec: ModelSpec, start: float = 0.0, livelock_bound: int = DEFAULT_LIVELOCK_BOUND) -> SimulatorState:
    return SimulatorState(spec, start, livelock_bound)


def next_event_time(sim: SimulatorState) -> float:
    return sim.next_event_time()


def inject(sim: SimulatorState, event: Event) -> SimulatorState:
    return sim.inject(event)


def advance(sim: SimulatorState, until: float) -> EventTrace:
    return sim.advance(until)


def simulate(spec: ModelSpec, injections=(), until: float = INFINITY, start: float = 0.0) -> EventTrace:
    """Build a simulator, queue ``injections`` and run to ``until``."""
    sim = SimulatorState(spec, start)
    for e in injections:
        sim.inject(e)
    return sim.advance(until)
