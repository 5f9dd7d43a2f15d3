"""Classic DEVS: model structures, simulator, flattening and the model dialect."""

from .flatten import flatten
from .lang import (
    Ast, Statement, UnrepresentableError, check, check_coupled, check_file, compile, compile_text,
    load_atomic, load_coupled, load_devs, parse, pretty_print,
)
from .model import (
    INFINITY, INPUT, OUTPUT, SELF, AtomicSpec, Branch, Coupling, CoupledSpec, DataType, MessageValue,
    Output, Port, canonical_json, collect_types, default_value, from_json, validate, validate_atomic,
    validate_coupled,
)
from .simulator import (
    SimulationError, SimulatorState, advance, init_simulator, inject, next_event_time, simulate,
)
from .trace import DROPPED, INTERNAL, Event, EventTrace, read_trace_csv
