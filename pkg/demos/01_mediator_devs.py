"""
A single DEVS atomic model: the flood-sensor mediator
=====================================================

The mediator boots, waits for two coordinates, then relays every depth
measure it receives.  We drive it with three injected events and look at
the trace the simulator records.
"""

from simse.devs import INPUT, Event, advance, init_simulator, inject, simulate
from simse.models import mediator_spec
from simse.models.fms import coordinate, measure

mediator = mediator_spec()
print("states:", sorted(mediator.states), " initial:", mediator.initial_state)
print("time advance:", mediator.ta)

# Coordinates arrive at t=2 and t=3, a depth-7 measure at t=5.
injections = [
    Event(2.0, (), "FromCoordinate", INPUT, coordinate(1)),
    Event(3.0, (), "ToCoordinate", INPUT, coordinate(2)),
    Event(5.0, (), "FromSensors", INPUT, measure(1, 7)),
]
trace = simulate(mediator, injections, until=10)
for e in trace:
    print(f"t={e.time:>4g}  {e.direction:<8} {e.port or '-':<15} {e.note or ''}")

# The single output forwards the stored measure one time unit later.
out = trace.outputs("Measure")[0]
print("output at", out.time, "depth", out.value.get(("depth", "value")))

# The same run, stepped by hand.  After t=7 the mediator is passive in s3.
sim = init_simulator(mediator)
for e in injections:
    inject(sim, e)
advance(sim, 7)
print("state at t=7:", sim.state_of())

# Traces serialise to CSV, one row per event.
print(trace.to_csv())
