"""Event records produced by the DEVS simulator and their CSV form."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .model import INPUT, OUTPUT, DataType, MessageValue, canonical_json, from_json

INTERNAL = "internal"
DROPPED = "DROPPED"

CSV_HEADER = ["time", "path", "port", "direction", "type", "payload_json"]


@dataclass(frozen=True)
class Event:
    time: float
    component_path: tuple = ()
    port: str = ""
    direction: str = INPUT
    value: Optional[MessageValue] = None
    note: Optional[str] = None

    @property
    def path(self) -> str:
        return ".".join(self.component_path)

    @property
    def dropped(self) -> bool:
        return self.note == DROPPED


class EventTrace:
    """Time-ordered list of events with a few query helpers."""

    def __init__(self, events=None):
        self.events: list[Event] = list(events or [])

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, EventTrace) and self.events == other.events

    def __repr__(self) -> str:
        return f"EventTrace({len(self.events)} events)"

    def extend(self, other: "EventTrace") -> None:
        self.events.extend(other.events)

    def outputs(self, port: Optional[str] = None, path: Optional[str] = None) -> list[Event]:
        return [e for e in self.events if e.direction == OUTPUT
                and (port is None or e.port == port) and (path is None or e.path == path)]

    def inputs(self, port: Optional[str] = None, path: Optional[str] = None) -> list[Event]:
        return [e for e in self.events if e.direction == INPUT
                and (port is None or e.port == port) and (path is None or e.path == path)]

    def dropped(self) -> list[Event]:
        return [e for e in self.events if e.dropped]

    def normalized(self) -> list[tuple]:
        """Events with hierarchical paths joined by dots, for comparing
        a hierarchical run with the run of its flattened model."""
        return [(e.time, e.path, e.port, e.direction, e.value, e.note) for e in self.events]

    def is_monotone(self) -> bool:
        return all(a.time <= b.time for a, b in zip(self.events, self.events[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in self.events:
            writer.writerow(_row(e))
        return buf.getvalue()


def _fmt_time(t: float) -> str:
    return format(t, ".12g")


def _row(e: Event) -> list[str]:
    if e.direction == INTERNAL:
        src, _, dst = (e.note or "->").partition("->")
        payload = json.dumps({"from": src, "to": dst}, sort_keys=True, separators=(",", ":"))
        return [_fmt_time(e.time), e.path, e.port, INTERNAL, "", payload]
    direction = "dropped" if e.dropped else e.direction
    vtype = e.value.type if e.value is not None else ""
    payload = canonical_json(e.value) if e.value is not None else ""
    return [_fmt_time(e.time), e.path, e.port, direction, vtype, payload]


def read_trace_csv(text: str, types: Mapping[str, DataType]) -> EventTrace:
    """Inverse of :meth:`EventTrace.to_csv`.

    Accepted-input transition notes are not part of the CSV, so a reloaded
    trace carries ``note=None`` on inputs.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"not a trace CSV (header {header})")
    events = []
    for row in reader:
        if not row:
            continue
        time, path, port, direction, vtype, payload = row
        comp = tuple(path.split(".")) if path else ()
        if direction == INTERNAL:
            obj = json.loads(payload)
            events.append(Event(float(time), comp, port, INTERNAL, None, f"{obj['from']}->{obj['to']}"))
            continue
        value = from_json(vtype, json.loads(payload), types) if vtype else None
        if direction == "dropped":
            events.append(Event(float(time), comp, port, INPUT, value, DROPPED))
        else:
            events.append(Event(float(time), comp, port, direction, value))
    return EventTrace(events)
