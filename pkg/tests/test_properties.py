"""Randomised properties of the engines and the harness."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from simse import vv
from simse.devs import (
    INFINITY, INPUT, OUTPUT, SELF, AtomicSpec, Coupling, CoupledSpec, DataType, Event, MessageValue, Output,
    Port, compile, flatten, parse, pretty_print, read_trace_csv, simulate,
)
from simse.experiment import Factor, full_factorial
from simse.sd import SDModel, TimeSpec, parse_expr, unparse
from simse.sd import simulate as simulate_sd
from simse.sd.expr import BinOp, Call, Neg, Num, Var

TOKEN = DataType("Token", (("value", "Integer"),))
FAST = settings(max_examples=40, deadline=None)


def tok(v):
    return MessageValue("Token", {"value": v})


# -- experiment design --------------------------------------------------------

level_lists = st.lists(st.integers(-50, 50), min_size=1, max_size=4, unique=True)


@FAST
@given(st.lists(level_lists, min_size=1, max_size=4))
def test_factorial_cardinality_and_order(levels):
    factors = [Factor(f"f{i}", tuple(lv)) for i, lv in enumerate(levels)]
    d = full_factorial(factors)
    assert len(d.trials) == math.prod(len(lv) for lv in levels)
    rows = [tuple(t.assignment[f.name] for f in factors) for t in d.trials]
    assert len(set(rows)) == len(rows)
    assert [t.trial_id for t in d.trials] == list(range(1, len(rows) + 1))
    # first factor fastest: its level cycles with period len(levels[0])
    assert [r[0] for r in rows[:len(levels[0])]] == list(levels[0])


# -- system dynamics ----------------------------------------------------------

@FAST
@given(st.lists(st.floats(0, 100), min_size=2, max_size=5),
       st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.floats(0, 0.5)), max_size=6),
       st.sampled_from(["euler", "rk4"]))
def test_internal_flows_conserve_total(inits, links, method):
    m = SDModel("closed", time=TimeSpec(0, 5, 0.25, method))
    for i, v in enumerate(inits):
        m.stock(f"s{i}", v)
    n = len(inits)
    for k, (a, b, rate) in enumerate(links):
        m.flow(f"f{k}", f"s{a % n}", f"s{b % n}", f"{rate!r} * s{a % n}")
    traj = simulate_sd(m)
    total = sum(traj[f"s{i}"] for i in range(n))
    assert np.max(np.abs(total - total[0])) <= 1e-9 * max(1.0, abs(total[0])) * len(traj.times)


@FAST
@given(st.floats(-100, 100), st.floats(-10, 10), st.sampled_from([0.5, 0.25, 0.125]))
def test_euler_exact_on_constant_rate(s0, rate, dt):
    m = SDModel("lin", time=TimeSpec(0, 4, dt)).stock("s", s0).flow("f", "boundary", "s", repr(rate))
    traj = simulate_sd(m)
    expected = s0 + rate * traj.times
    assert np.allclose(traj["s"], expected, rtol=0, atol=1e-12 * (1 + abs(s0) + abs(rate) * 4) * len(traj.times))


@FAST
@given(st.floats(0.01, 1), st.floats(1, 100))
def test_runs_are_deterministic(k, s0):
    m = SDModel("d", time=TimeSpec(0, 10, 0.5)).const("k", k).stock("s", s0).flow("f", "s", "boundary", "k * s")
    assert simulate_sd(m).to_csv() == simulate_sd(m).to_csv()
    assert np.array_equal(simulate_sd(m, {"k": k}).values, simulate_sd(m).values)


leaf = st.one_of(st.floats(0, 1e6, allow_nan=False).map(Num), st.sampled_from(["a", "b", "TIME"]).map(Var))


def _tree(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from(["+", "-", "*", "/", "<", ">="]), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["MIN", "MAX"]), st.lists(children, min_size=1, max_size=3))
        .map(lambda t: Call(t[0], tuple(t[1]))),
        st.tuples(children, children, children).map(lambda t: Call("IF", t)),
    )


@FAST
@given(st.recursive(leaf, _tree, max_leaves=12))
def test_expression_unparse_round_trip(e):
    assert parse_expr(unparse(e)) == e


# -- DEVS ---------------------------------------------------------------------

@st.composite
def state_machines(draw):
    n = draw(st.integers(2, 5))
    states = [f"q{i}" for i in range(n)]
    ta = {s: draw(st.sampled_from([INFINITY, 0.5, 1.0, 2.0, 3.0])) for s in states}
    internal = {s: draw(st.sampled_from(states)) for s in states if ta[s] != INFINITY}
    external = {}
    for s in states:
        if draw(st.booleans()):
            external[(s, "In")] = draw(st.sampled_from(states))
    outputs = {s: (Output("Out"),) for s in internal if draw(st.booleans())}
    return AtomicSpec(
        name="m", states=frozenset(states), initial_state=states[0], ta=ta, internal_transitions=internal,
        external_transitions=external, outputs=outputs,
        ports=frozenset({Port("In", INPUT, "Token"), Port("Out", OUTPUT, "Token")}), data_types={"Token": TOKEN})


injection_lists = st.lists(st.tuples(st.integers(0, 40).map(lambda x: x / 4), st.integers(0, 9)), max_size=6)


def _events(raw):
    return [Event(t, (), "In", INPUT, tok(v)) for t, v in sorted(raw)]


@FAST
@given(state_machines())
def test_pretty_print_round_trip(spec):
    again = compile(parse(pretty_print(spec)), name="m")
    assert again == spec


@FAST
@given(state_machines(), injection_lists)
def test_simulated_traces_conform(spec, raw):
    inj = _events(raw)
    trace = simulate(spec, inj, until=15)
    assert vv.trace_conformance(spec, trace, inj).passed
    assert trace.is_monotone()
    back = read_trace_csv(trace.to_csv(), spec.data_types)
    assert [(e.time, e.port, e.direction, e.value) for e in back] == \
        [(e.time, e.port, e.direction, e.value) for e in trace]


@FAST
@given(st.lists(state_machines(), min_size=2, max_size=3), injection_lists)
def test_flatten_preserves_behaviour(children, raw):
    names = [f"c{i}" for i in range(len(children))]
    couplings = [Coupling(SELF, "In", names[0], "In")]
    couplings += [Coupling(a, "Out", b, "In") for a, b in zip(names, names[1:])]
    couplings.append(Coupling(names[-1], "Out", SELF, "Out"))
    inner = CoupledSpec("inner", tuple(zip(names[1:], children[1:])),
                        frozenset({Port("In", INPUT, "Token"), Port("Out", OUTPUT, "Token")}),
                        tuple([Coupling(SELF, "In", names[1], "In")]
                              + [Coupling(a, "Out", b, "In") for a, b in zip(names[1:], names[2:])]
                              + [Coupling(names[-1], "Out", SELF, "Out")]))
    outer = CoupledSpec("outer", ((names[0], children[0]), ("inner", inner)),
                        frozenset({Port("In", INPUT, "Token"), Port("Out", OUTPUT, "Token")}),
                        (Coupling(SELF, "In", names[0], "In"), Coupling(names[0], "Out", "inner", "In"),
                         Coupling("inner", "Out", SELF, "Out")))
    inj = _events(raw)
    hier = simulate(outer, inj, until=12)
    flat = simulate(flatten(outer), inj, until=12)
    assert hier.normalized() == flat.normalized()


# -- metrics ------------------------------------------------------------------

vectors = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20)


@FAST
@given(vectors, st.data())
def test_metric_axioms(a, data):
    b = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(a), max_size=len(a)))
    for metric in (vv.mae, vv.rmse, vv.max_abs):
        assert metric(a, a) == 0
        assert metric(a, b) == metric(b, a) >= 0
    assert vv.mae(a, b) <= vv.rmse(a, b) * (1 + 1e-12) + 1e-12
    assert vv.rmse(a, b) <= vv.max_abs(a, b) * (1 + 1e-12) + 1e-12
