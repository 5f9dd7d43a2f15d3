"""
Verification and validation
===========================

Verification asks whether the simulator follows its specification: trace
conformance for DEVS, step-size convergence for system dynamics.
Validation compares behaviour with a reference: qualitative patterns,
extreme conditions and reference series.  Suite files bundle checks.
"""

from simse import vv
from simse.devs import INPUT, Event, EventTrace, simulate
from simse.models import BrooksParams, brooks_model, data_path, mediator_spec, trigger_time
from simse.models.fms import coordinate, measure
from simse.sd import simulate as simulate_sd


def show(*checks):
    report = vv.VnVReport()
    for c in checks:
        report.add(c)
    print(report.to_text())


mediator = mediator_spec()
inj = [Event(2.0, (), "FromCoordinate", INPUT, coordinate(1)),
       Event(3.0, (), "ToCoordinate", INPUT, coordinate(2)),
       Event(5.0, (), "FromSensors", INPUT, measure(1, 7))]
trace = simulate(mediator, inj, until=10)
show(vv.trace_conformance(mediator, trace, inj))

# Tamper with the output time and the checker points at the bad event.
events = list(trace)
k = next(i for i, e in enumerate(events) if e.direction == "output")
events[k] = Event(7.0, events[k].path, events[k].port, events[k].direction, events[k].value)
show(vv.trace_conformance(mediator, EventTrace(events), inj))

model = brooks_model()
traj = simulate_sd(model, {"staffing_pulse": 4})
t0 = trigger_time(traj)
show(vv.detect_pattern(traj, vv.PatternSpec("drop_then_recover", "production_rate",
                                             {"trigger_time": t0, "window": 40})),
     vv.convergence_check(model, {"staffing_pulse": 4}, "production_rate", 200, 0.01))

corners = [{"initial_veterans": 0, "staffing_pulse": 6}, {"entropy_factor": 1, "staffing_pulse": 6}]
print(vv.extreme_conditions(model, corners).to_text())

# Error metrics used by reference comparisons.
a, b = [1.0, 2.0, 3.0], [1.5, 2.0, 2.0]
print(f"MAE {vv.mae(a, b):.3f}  RMSE {vv.rmse(a, b):.3f}  max {vv.max_abs(a, b):.3f}")

# The bundled suite runs ten checks of all kinds.
report = vv.run_suite(model, vv.load_suite(data_path("suites/brooks-default.suite")))
print(report.to_text())
