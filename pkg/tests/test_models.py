import numpy as np
import pytest

from simse.devs import INPUT, Event, compile, flatten, load_atomic, load_devs, parse, simulate
from simse.models import (
    BrooksParams, FmsParams, brooks_model, data_path, fms_model, list_models, load_model, mediator_spec,
    resolve_model, trigger_time,
)
from simse.models.fms import measure, shipped_files
from simse.sd import SDModel
from simse.sd import simulate as simulate_sd

PULSES = (0, 2, 4, 6)
ENTROPIES = (0.03, 0.06)


@pytest.fixture(scope="module")
def runs():
    out = {}
    for e in ENTROPIES:
        for p in PULSES:
            out[p, e] = simulate_sd(brooks_model(BrooksParams(staffing_pulse=p, entropy_factor=e)))
    return out


def delivered(traj, pulse):
    t0 = trigger_time(traj)
    if t0 is None:
        return np.zeros_like(traj.times)
    return np.where(traj.times >= t0 + traj.dt - 1e-12, pulse, 0.0)


class TestBrooks:
    def test_structure(self):
        m = brooks_model()
        assert [s.name for s in m.stocks] == ["rookies", "veterans", "completed_work"]
        assert {(f.name, f.source, f.target) for f in m.flows} == {
            ("personnel_allocation", "boundary", "rookies"), ("assimilation_rate", "rookies", "veterans"),
            ("production", "boundary", "completed_work")}
        assert {"team_size", "communication_overhead", "mentoring_load", "effective_veterans",
                "production_rate", "scheduled_completion", "perceived_slip",
                "allocation_trigger"} <= {a.name for a in m.auxiliaries}

    @pytest.mark.parametrize("bad", [{"staffing_pulse": -1}, {"entropy_factor": 1.5},
                                     {"investment_in_mentoring": 2}, {"individual_learning_time": 0}])
    def test_param_validation(self, bad):
        with pytest.raises(ValueError):
            BrooksParams(**bad)

    def test_trigger_calibration(self, runs):
        traj = runs[0, 0.03]
        t0 = trigger_time(traj)
        assert 95 <= t0 <= 105
        flag = traj["allocation_trigger"]
        first = int(np.argmax(flag > 0))
        assert traj.times[first] == t0 and np.all(flag[:first] == 0) and np.all(flag[first:] == 1)

    def test_no_pulse_is_continuous(self, runs):
        traj = runs[0, 0.03]
        steps = np.abs(np.diff(traj["production_rate"]))
        assert steps.max() < 0.01
        assert np.all(traj["rookies"] == 0)

    def test_pulse_jump(self, runs):
        traj = runs[4, 0.03]
        i = traj.index_of(trigger_time(traj))
        assert traj["rookies"][i] == 0 and traj["rookies"][i + 1] == 4
        assert traj["rookies"][-1] < 1e-3
        assert abs(traj["veterans"][-1] - traj["veterans"][0] - 4) < 1e-3

    @pytest.mark.parametrize("pulse", PULSES)
    @pytest.mark.parametrize("entropy", ENTROPIES)
    def test_personnel_conservation(self, runs, pulse, entropy):
        traj = runs[pulse, entropy]
        err = traj["rookies"] + traj["veterans"] - 10 - delivered(traj, pulse)
        assert np.max(np.abs(err)) < 1e-9
        assert traj.annotations == []

    @pytest.mark.parametrize("pulse", PULSES[1:])
    @pytest.mark.parametrize("entropy", ENTROPIES)
    def test_short_term_drop_and_recovery(self, runs, pulse, entropy):
        traj, base = runs[pulse, entropy], runs[0, entropy]
        t0 = trigger_time(traj)
        pr, times = traj["production_rate"], traj.times
        before = times < t0
        np.testing.assert_allclose(pr[before], base["production_rate"][before], rtol=0, atol=1e-9)
        pre = pr[before][-1]
        window = (times > t0) & (times <= t0 + 40)
        assert pr[window].min() < pre
        assert np.any(pr[times > t0 + 40] > pre)

    @pytest.mark.parametrize("entropy", ENTROPIES)
    def test_monotone_disruption(self, runs, entropy):
        mins = []
        for p in PULSES:
            traj = runs[p, entropy]
            after = traj.times >= trigger_time(traj)
            mins.append(traj["production_rate"][after].min())
        assert all(a >= b for a, b in zip(mins, mins[1:]))

    def test_higher_entropy_triggers_earlier(self, runs):
        assert trigger_time(runs[0, 0.06]) < trigger_time(runs[0, 0.03])


class TestFms:
    def test_mediator_matches_file(self, mediator):
        text = data_path("mediator.devsnl").read_text()
        assert mediator_spec() == compile(parse(text), name="mediator") == mediator

    def test_params(self):
        with pytest.raises(ValueError):
            FmsParams(sensor_count=3)
        with pytest.raises(ValueError):
            FmsParams(flood_depth_threshold=0)
        with pytest.raises(ValueError):
            FmsParams(depth_sequences=((1,), ()))

    def test_single_crossing_gives_one_alarm(self):
        trace = simulate(fms_model(), until=100)
        alarms = trace.outputs("Alarm", "")
        assert len(alarms) == 1 and alarms[0].value.get(("depth", "value")) == 11
        # emitted by sensor 1 at boot + 5 periods, then one time unit per mediator
        emit = [e for e in trace.outputs("Measure", "segment1.sensor") if e.value == alarms[0].value]
        assert emit[0].time == 27 and alarms[0].time == emit[0].time + 2
        assert trace.dropped() == []

    def test_sub_threshold_gives_no_alarm(self):
        params = FmsParams(depth_sequences=((1, 2, 3), (4, 5, 10)))
        trace = simulate(fms_model(params), until=100)
        assert trace.outputs("Alarm") == []
        assert len(trace.outputs("Measure", "segment2.mediator")) == 6

    def test_alarm_causality(self):
        params = FmsParams(depth_sequences=((3, 12, 4, 15), (2, 20, 1)))
        trace = simulate(fms_model(params), until=100)
        alarms = trace.outputs("Alarm", "gateway")
        assert len(alarms) == 3
        sensor_out = [e for e in trace.outputs("Measure") if e.path.endswith("sensor")]
        for a in alarms:
            assert any(e.time < a.time and e.value == a.value for e in sensor_out)
            assert a.value.get(("depth", "value")) > params.flood_depth_threshold

    def test_upstream_injection_reaches_gateway(self):
        trace = simulate(fms_model(), [Event(3, (), "Upstream", INPUT, measure(0, 50))], until=10)
        assert [(e.time, e.value) for e in trace.outputs("Alarm", "")] == [(5.0, measure(0, 50))]

    def test_flatten_equivalence(self):
        inj = [Event(3, (), "Upstream", INPUT, measure(0, 50))]
        model = fms_model()
        assert simulate(model, inj, until=60).normalized() == simulate(flatten(model), inj, until=60).normalized()

    def test_shipped_files_are_current(self):
        for name, text in shipped_files().items():
            assert data_path(name).read_text() == text, name

    def test_shipped_fms_loads(self):
        fms = load_devs(data_path("fms.devsc"))
        sensor = load_atomic(data_path("sensor1.devsnl"))
        assert sensor.states == {"boot", "r0", "r1", "r2", "r3", "r4", "done"}
        trace = simulate(fms, until=40)
        assert len(trace.outputs("Measure", "segment2.mediator")) > 0


class TestCatalogue:
    def test_list_models(self):
        listing = dict(list_models())
        assert listing["brooks.sd"] == "system dynamics" and listing["mediator.devsnl"] == "DEVS atomic"
        assert listing["fms.devsc"] == "DEVS coupled"

    def test_resolve_prefers_local(self, tmp_path):
        assert resolve_model("brooks.sd") == data_path("brooks.sd")
        local = tmp_path / "brooks.sd"
        local.write_text(data_path("brooks.sd").read_text())
        assert resolve_model("brooks.sd", tmp_path) == local
        with pytest.raises(FileNotFoundError):
            resolve_model("nothing.sd")

    def test_load_model_dispatch(self):
        assert isinstance(load_model(data_path("brooks.sd")), SDModel)
        with pytest.raises(ValueError):
            load_model("model.txt")
