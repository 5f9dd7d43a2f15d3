"""Acceptance criteria, one test per criterion.

Each test is named ``test_criterion_NN_...``; the hook in conftest.py prints a
PASS/FAIL line per criterion at the end of the session.  Run on its own with
``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from simse import vv
from simse.cli import main
from simse.devs import (
    INFINITY, INPUT, OUTPUT, SELF, AtomicSpec, Coupling, CoupledSpec, DataType, Event, MessageValue, Output,
    Port, compile, flatten, init_simulator, inject, advance, parse, pretty_print, simulate,
)
from simse.experiment import Factor, ResponseSpec, SdTarget, full_factorial, results_csv, run_experiment
from simse.models import BrooksParams, FmsParams, brooks_model, data_path, fms_model, trigger_time
from simse.models.fms import coordinate, measure
from simse.sd import SDModel, TimeSpec
from simse.sd import simulate as simulate_sd

STAFFING_DESIGN = [(0, 0.03), (2, 0.03), (4, 0.03), (6, 0.03), (0, 0.06), (2, 0.06), (4, 0.06), (6, 0.06)]


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SIMSE_OUTPUT_DIR", raising=False)
    return tmp_path


@pytest.fixture(scope="module")
def staffing_runs():
    """All eight trials of the staffing experiment, timed as one batch."""
    with Timer() as t:
        runs = {(p, e): simulate_sd(brooks_model(BrooksParams(staffing_pulse=p, entropy_factor=e)))
                for p, e in STAFFING_DESIGN}
    return runs, t.elapsed


def test_criterion_01_factorial_design(capsys):
    with Timer() as t:
        d = full_factorial([Factor("staffing_pulse", (0, 2, 4, 6)), Factor("entropy_factor", (0.03, 0.06))])
        assert main(["experiment", "table1.exp", "--design-only"]) == 0
    assert [(tr.assignment["staffing_pulse"], tr.assignment["entropy_factor"]) for tr in d.trials] == STAFFING_DESIGN
    assert [tr.trial_id for tr in d.trials] == list(range(1, 9))
    rows = [line.split() for line in capsys.readouterr().out.splitlines()]
    assert rows == [["trial", "staffing_pulse", "entropy_factor"]] + \
        [[str(i + 1), str(p), str(e)] for i, (p, e) in enumerate(STAFFING_DESIGN)]
    assert t.elapsed < 1


def test_criterion_02_mediator_compilation():
    with Timer() as t:
        spec = compile(parse(data_path("mediator.devsnl").read_text()), name="mediator")
    assert spec.states == {f"s{i}" for i in range(6)} and spec.initial_state == "s0"
    assert spec.ta == {"s0": 1, "s4": 1, "s5": 1, "s1": INFINITY, "s2": INFINITY, "s3": INFINITY}
    ins = {p.name: p.message_type for p in spec.ports if p.direction == INPUT}
    outs = {p.name: p.message_type for p in spec.ports if p.direction == OUTPUT}
    assert len(ins) == 3 and outs == {"Measure": "Measure"}
    coord = [p for p, ty in ins.items() if ty == "Coordinate"]
    meas = [p for p, ty in ins.items() if ty == "Measure"]
    assert len(coord) == 2 and len(meas) == 1
    expected = {("s1", p): "s2" for p in coord} | {("s2", p): "s3" for p in coord} | {("s3", meas[0]): "s4"}
    assert spec.external_transitions == expected
    assert spec.outputs == {"s4": (Output("Measure"),)}
    assert t.elapsed < 1


def test_criterion_03_mediator_golden_trace(mediator):
    inj = [Event(2.0, (), "FromCoordinate", INPUT, coordinate(1)),
           Event(3.0, (), "ToCoordinate", INPUT, coordinate(2)),
           Event(5.0, (), "FromSensors", INPUT, measure(1, 7))]
    with Timer() as t:
        trace = simulate(mediator, inj, until=10)
        sim = init_simulator(mediator)
        for e in inj:
            inject(sim, e)
        advance(sim, 7)
        check = vv.trace_conformance(mediator, trace, inj)
    outs = trace.outputs()
    assert [(e.time, e.port) for e in outs] == [(6.0, "Measure")]
    assert sim.state_of() == "s3"
    assert check.passed, check.evidence
    assert t.elapsed < 1


def test_criterion_04_brooks_laws(staffing_runs):
    runs, elapsed = staffing_runs
    window = 2 * BrooksParams().individual_learning_time
    for e in (0.03, 0.06):
        base = runs[0, e]["production_rate"]
        for p in (2, 4, 6):
            traj = runs[p, e]
            t0 = trigger_time(traj)
            pr, times = traj["production_rate"], traj.times
            before = times < t0
            assert np.max(np.abs(pr[before] - base[before])) <= 1e-9
            pre = pr[before][-1]
            assert pr[(times > t0) & (times <= t0 + window)].min() < pre
            assert np.any(pr[times > t0 + window] > pre)
    assert elapsed < 10


def test_criterion_05_personnel_conservation(staffing_runs):
    runs, _ = staffing_runs
    initial = BrooksParams().initial_veterans
    for (p, _e), traj in runs.items():
        t0 = trigger_time(traj)
        # the pulse lands in rookies on the step after the trigger fires
        delivered = np.where(traj.times >= t0 + traj.dt - 1e-12, p, 0.0) if t0 is not None else 0.0
        err = traj["rookies"] + traj["veterans"] - initial - delivered
        assert np.max(np.abs(err)) < 1e-9


TOKEN = DataType("Token", (("value", "Integer"),))


def tok(v):
    return MessageValue("Token", {"value": v})


def relay(name, delay):
    return AtomicSpec(
        name=name, states=frozenset({"idle", "busy"}), initial_state="idle",
        ta={"idle": INFINITY, "busy": delay}, internal_transitions={"busy": "idle"},
        external_transitions={("idle", "In"): "busy"}, outputs={"busy": (Output("Out"),)},
        ports=frozenset({Port("In", INPUT, "Token"), Port("Out", OUTPUT, "Token")}), data_types={"Token": TOKEN})


def test_criterion_06_closure_under_coupling():
    pipe = CoupledSpec("pipe", (("a", relay("a", 1.0)), ("b", relay("b", 2.0))),
                       frozenset({Port("In", INPUT, "Token"), Port("Out", OUTPUT, "Token")}),
                       (Coupling(SELF, "In", "a", "In"), Coupling("a", "Out", "b", "In"),
                        Coupling("b", "Out", SELF, "Out")))
    pipe_scenarios = [
        [Event(1, (), "In", INPUT, tok(4))],
        [Event(1, (), "In", INPUT, tok(1)), Event(1.5, (), "In", INPUT, tok(2)), Event(2, (), "In", INPUT, tok(3))],
        [Event(0, (), "In", INPUT, tok(7)), Event(3, (), "In", INPUT, tok(8)), Event(3, (), "In", INPUT, tok(9)),
         Event(10, (), "In", INPUT, tok(1))],
    ]
    fms_scenarios = [
        [],
        [Event(3, (), "Upstream", INPUT, measure(0, 50))],
        [Event(3, (), "Upstream", INPUT, measure(0, 50)), Event(17, (), "Upstream", INPUT, measure(0, 4)),
         Event(29, (), "Upstream", INPUT, measure(0, 99))],
    ]
    with Timer() as t:
        for model, scenarios, until in ((pipe, pipe_scenarios, 30), (fms_model(), fms_scenarios, 60)):
            flat = flatten(model)
            for inj in scenarios:
                assert simulate(model, inj, until=until).normalized() == \
                    simulate(flat, inj, until=until).normalized()
    assert t.elapsed < 5


def test_criterion_07_numerical_convergence():
    exact = 100 * math.exp(-1)

    def final(dt, method="euler"):
        m = SDModel("decay", time=TimeSpec(0, 10, dt, method)).stock("s", 100).flow("out", "s", "boundary", "0.1 * s")
        return simulate_sd(m)["s"][-1]

    with Timer() as t:
        errs = [abs(final(dt) - exact) for dt in (0.5, 0.25, 0.125)]
        rk4 = final(0.25, "rk4")
    for coarse, fine in zip(errs, errs[1:]):
        assert 1.8 <= coarse / fine <= 2.2
    assert abs(rk4 - exact) / exact < 1e-6
    assert t.elapsed < 1


def test_criterion_08_determinism(workdir):
    with Timer() as t:
        for sub in ("a", "b"):
            assert main(["--output-dir", sub, "run", "brooks.sd", "--set", "staffing_pulse=4"]) == 0
            assert main(["--output-dir", sub, "run", "fms.devsc"]) == 0
            assert main(["--output-dir", sub, "experiment", "table1.exp"]) == 0
        assert main(["--output-dir", "par", "experiment", "table1.exp", "--parallel", "4"]) == 0
        target = SdTarget(brooks_model())
        design = full_factorial([Factor("staffing_pulse", (0, 2, 4, 6)), Factor("entropy_factor", (0.03, 0.06))])
        resp = [ResponseSpec("pr", "production_rate", "full_series"), ResponseSpec("done", "completed_work")]
        seq = run_experiment(target, design, resp)
        par = run_experiment(target, design, resp, parallel=True, max_workers=4)
    files = sorted(p.relative_to(workdir / "a") for p in (workdir / "a").rglob("*.csv"))
    assert len(files) == 11
    for rel in files:
        assert (workdir / "a" / rel).read_bytes() == (workdir / "b" / rel).read_bytes(), rel
        if rel.name.startswith("table1") or rel.parent.name.startswith("table1"):
            assert (workdir / "a" / rel).read_bytes() == (workdir / "par" / rel).read_bytes(), rel
    assert sorted(r.key() for r in seq) == sorted(r.key() for r in par)
    names = ["staffing_pulse", "entropy_factor"]
    assert results_csv(seq, names, resp) == results_csv(par, names, resp)
    assert t.elapsed < 10


def test_criterion_09_parser_round_trip():
    files = sorted(data_path(".").glob("*.devsnl"))
    assert len(files) >= 4
    with Timer() as t:
        for path in files:
            first = compile(parse(path.read_text()), name=path.stem)
            assert compile(parse(pretty_print(first)), name=path.stem) == first, path.name
    assert t.elapsed < 1


def test_criterion_10_fms_alarm_causality():
    with Timer() as t:
        once = simulate(fms_model(FmsParams(depth_sequences=((3, 5, 7, 12, 4), (2, 3, 4, 5, 6)))), until=100)
        never = simulate(fms_model(FmsParams(depth_sequences=((3, 5, 7, 9, 4), (2, 3, 4, 5, 6)))), until=100)
    alarms = once.outputs("Alarm", "")
    assert len(alarms) == 1
    alarm = alarms[0]
    assert alarm.value.get(("depth", "value")) == 12
    emitted = [e for e in once.outputs("Measure") if e.path.endswith("sensor") and e.value == alarm.value]
    assert emitted and emitted[0].time < alarm.time
    assert never.outputs("Alarm") == []
    assert t.elapsed < 1


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
