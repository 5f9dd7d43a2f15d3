import math

import numpy as np
import pytest

from simse.diagnostics import DiagnosticError
from simse.models import BrooksParams, brooks_model, data_path
from simse.sd import (
    ExpressionError, ModelFileError, SDError, SDModel, TimeSpec, check_model, convergence_probe, dumps,
    eval_order, load, loads, parse_expr, simulate, unparse,
)


def decay(dt=0.25, method="euler"):
    return (SDModel("decay", time=TimeSpec(0, 10, dt, method)).const("k", 0.1)
            .stock("s", 100).flow("out", "s", "boundary", "k * s"))


def two_tanks():
    return (SDModel("tanks", time=TimeSpec(0, 20, 0.5)).const("r", 0.3)
            .stock("a", 50).stock("b", 5)
            .flow("ab", "a", "b", "r * a").flow("ba", "b", "a", "0.1 * b + PULSE(3, 7)"))


def codes(model):
    return [d.code for d in check_model(model)]


class TestExpressions:
    @pytest.mark.parametrize("text", [
        "a + b * c", "(a + b) * c", "a - (b - c)", "a / (b / c)", "-a * -(b + 1)",
        "IF(TIME >= 5, MIN(a, 2), MAX(b, 1, c))", "PULSE(10, 2 / DT, DT) + STEP(3, 4)", "a <= -1.5",
    ])
    def test_unparse_round_trip(self, text):
        e = parse_expr(text)
        assert parse_expr(unparse(e)) == e

    @pytest.mark.parametrize("text", ["a +", "(a", "FOO(1)", "MIN()", "IF(1, 2)", "a $ b", "1 2"])
    def test_errors(self, text):
        with pytest.raises(ExpressionError):
            parse_expr(text)

    def test_number_literal(self):
        assert unparse(parse_expr("2.50")) == "2.5"


class TestCheckModel:
    def test_brooks_is_clean(self):
        assert check_model(brooks_model()) == []

    def test_algebraic_loop_names_members(self):
        m = SDModel("loop").aux("a", "b").aux("b", "a").aux("c", "1")
        diags = [d for d in check_model(m) if d.code == "ALGEBRAIC_LOOP"]
        assert len(diags) == 1 and diags[0].element == "a,b"

    def test_stock_breaks_cycle(self):
        m = SDModel("ok").stock("s", 1).flow("f", "boundary", "s", "g").aux("g", "s * 0.5")
        assert check_model(m) == []

    @pytest.mark.parametrize("time", [TimeSpec(0, 10, 0), TimeSpec(0, 10, -1), TimeSpec(5, 5, 1),
                                      TimeSpec(0, 10, 0.3), TimeSpec(0, 10, 1, "heun")])
    def test_invalid_time(self, time):
        assert codes(SDModel("t", time=time)) == ["INVALID_TIME"]

    def test_whole_steps_within_tolerance(self):
        assert check_model(SDModel("t", time=TimeSpec(0, 0.3, 0.1))) == []

    def test_names(self):
        assert "DUPLICATE_NAME" in codes(SDModel("d").const("x", 1).aux("x", "2"))
        assert "UNKNOWN_NAME" in codes(SDModel("u").aux("x", "y + 1"))
        assert "UNKNOWN_NAME" in codes(SDModel("u").stock("s", 1).flow("f", "s", "nowhere", "1"))
        assert "UNKNOWN_NAME" in codes(SDModel("u").stock("s", 1).aux("a", "2").stock("t", "a"))
        assert "RESERVED_NAME" in codes(SDModel("r").const("TIME", 1))


class TestEvalOrder:
    def test_constants_first(self):
        order = eval_order(SDModel("o").aux("c", "a + b").const("a", 1).const("b", 2))
        assert set(order[:2]) == {"a", "b"} and order[-1] == "c"

    def test_chain(self):
        m = SDModel("chain")
        for name, expr in [("e", "d"), ("d", "c"), ("c", "b"), ("b", "a"), ("a", "1")]:
            m.aux(name, expr)
        assert eval_order(m) == ["a", "b", "c", "d", "e"]

    def test_every_dependency_precedes(self):
        from simse.sd.expr import names
        m = brooks_model()
        order = eval_order(m)
        pos = {n: i for i, n in enumerate(order)}
        for n, e in m.expressions().items():
            assert all(pos[d] < pos[n] for d in names(e))
        assert pos["assimilation_rate"] > pos["rookies"]


class TestSimulate:
    def test_single_euler_step(self):
        m = SDModel("one", time=TimeSpec(0, 0.5, 0.5)).stock("S", 10).flow("in", "boundary", "S", "2")
        traj = simulate(m)
        assert list(traj["S"]) == [10.0, 11.0]

    def test_zero_flows_constant(self):
        m = SDModel("still", time=TimeSpec(0, 5, 0.5)).stock("S", 3.5).aux("double", "2 * S")
        traj = simulate(m)
        assert np.all(traj["S"] == 3.5) and np.all(traj["double"] == 7.0)

    def test_euler_exact_on_constant_rates(self):
        m = SDModel("lin", time=TimeSpec(0, 10, 0.25)).stock("S", 1).flow("in", "boundary", "S", "0.5")
        traj = simulate(m)
        assert np.array_equal(traj["S"], 1 + 0.5 * traj.times)

    def test_rates_use_step_start_state(self):
        # both flows drain the same stock; order of declaration must not matter
        a = SDModel("a", time=TimeSpec(0, 1, 1)).stock("s", 10).flow("f", "s", "boundary", "s / 2") \
            .flow("g", "s", "boundary", "s / 4")
        assert simulate(a)["s"][-1] == 10 - 5 - 2.5

    def test_clamp_is_annotated(self):
        m = SDModel("drain", time=TimeSpec(0, 3, 1)).stock("s", 1.5, nonnegative=True) \
            .flow("out", "s", "boundary", "1")
        traj = simulate(m)
        assert list(traj["s"]) == [1.5, 0.5, 0.0, 0.0]
        assert [(a.time, a.variable, a.code) for a in traj.annotations] == [(2.0, "s", "CLAMPED"), (3.0, "s", "CLAMPED")]

    def test_numeric_error_reports_time_and_variable(self):
        m = SDModel("div", time=TimeSpec(0, 10, 1)).stock("s", 3).flow("out", "s", "boundary", "1") \
            .aux("ratio", "1 / s")
        with pytest.raises(SDError) as exc:
            simulate(m)
        assert (exc.value.code, exc.value.time, exc.value.variable) == ("NUMERIC_ERROR", 3.0, "ratio")

    def test_overflow_is_numeric_error(self):
        m = SDModel("boom", time=TimeSpec(0, 100, 1)).stock("s", 10).flow("g", "boundary", "s", "s * s")
        with pytest.raises(SDError) as exc:
            simulate(m)
        assert exc.value.code == "NUMERIC_ERROR"

    def test_override_unknown(self):
        with pytest.raises(SDError) as exc:
            simulate(decay(), {"nope": 1})
        assert exc.value.code == "OVERRIDE_UNKNOWN"

    def test_invalid_model_rejected(self):
        with pytest.raises(DiagnosticError) as exc:
            simulate(decay(), dt=0.3)
        assert exc.value.codes == ["INVALID_TIME"]

    def test_stock_override_replaces_initial(self):
        assert simulate(decay(), {"s": 50})["s"][0] == 50

    def test_conservation(self):
        traj = simulate(two_tanks())
        total = traj["a"] + traj["b"]
        assert np.max(np.abs(total - total[0])) < 1e-9

    def test_override_equivalence_and_determinism(self):
        base = simulate(two_tanks())
        same = simulate(two_tanks(), {"r": 0.3})
        again = simulate(two_tanks())
        assert np.array_equal(base.values, same.values) and np.array_equal(base.values, again.values)
        assert base.to_csv() == again.to_csv()

    def test_grid_integrity(self):
        traj = simulate(decay(dt=0.1))
        assert len(traj.times) == 101
        assert np.array_equal(traj.times, 0 + np.arange(101) * 0.1)

    def test_pulse_is_one_step_impulse(self):
        m = SDModel("p", time=TimeSpec(0, 5, 0.5)).stock("s", 0).flow("in", "boundary", "s", "PULSE(2, 3 / DT, DT)")
        traj = simulate(m)
        assert traj.value_at("in", 2) == 6 and traj.value_at("in", 2.5) == 0
        assert traj.value_at("s", 2) == 0 and traj.value_at("s", 2.5) == 3

    def test_step_and_if(self):
        m = SDModel("s", time=TimeSpec(0, 4, 1)).aux("a", "STEP(5, 2)").aux("b", "IF(TIME > 2, 1, -1)")
        traj = simulate(m)
        assert list(traj["a"]) == [0, 0, 5, 5, 5] and list(traj["b"]) == [-1, -1, -1, 1, 1]

    def test_latch_time(self):
        m = SDModel("l", time=TimeSpec(0, 6, 0.5)).aux("hit", "LATCH_TIME(TIME >= 2.2, -1)")
        traj = simulate(m, method="rk4")
        assert traj.value_at("hit", 2) == -1 and traj.value_at("hit", 2.5) == 2.5 and traj["hit"][-1] == 2.5

    def test_csv_format(self):
        text = simulate(decay(dt=2.5)).to_csv(["s"])
        assert text.splitlines()[:3] == ["time,s", "0,100", "2.5,75"]


class TestAccuracy:
    def test_euler_first_order(self):
        exact = 100 * math.exp(-1)
        errs = [abs(simulate(decay(dt)).value_at("s", 10) - exact) for dt in (0.5, 0.25, 0.125)]
        assert 1.8 <= errs[0] / errs[1] <= 2.2 and 1.8 <= errs[1] / errs[2] <= 2.2

    def test_rk4(self):
        got = simulate(decay(0.25, "rk4")).value_at("s", 10)
        assert abs(got - 100 * math.exp(-1)) / (100 * math.exp(-1)) < 1e-6

    def test_probe_brackets_closed_form(self):
        res = convergence_probe(decay(0.5), variable="s", t_check=10)
        exact = 100 * math.exp(-1)
        assert res.value_dt < res.value_half_dt < res.value_quarter_dt < exact
        assert 1.8 <= res.ratio <= 2.2 and not res.exact

    def test_probe_exact(self):
        m = SDModel("still", time=TimeSpec(0, 5, 0.5)).stock("S", 3)
        assert convergence_probe(m, variable="S", t_check=5).exact

    @pytest.mark.parametrize("pulse", [2, 4, 6])
    def test_brooks_step_sensitivity(self, pulse):
        m = brooks_model(BrooksParams(staffing_pulse=pulse))
        a = simulate(m).value_at("production_rate", 200)
        b = simulate(m, dt=0.125).value_at("production_rate", 200)
        ref = simulate(m, dt=0.01, method="rk4").value_at("production_rate", 200)
        assert abs(a - b) / abs(ref) < 0.01
        assert abs(b - ref) / abs(ref) < 0.01


class TestFileFormat:
    def test_round_trip(self):
        m = two_tanks()
        back = loads(dumps(m), "tanks")
        assert back == m

    def test_bundled_brooks_matches_builder(self):
        m = load(data_path("brooks.sd"))
        assert m == brooks_model()

    def test_comments_and_nonneg(self):
        m = loads("# header\nconst k = 2 # trailing\nstock s init k * 3 nonneg\ntime 0 1 0.5 rk4\n")
        assert m.stocks[0].nonnegative and simulate(m)["s"][0] == 6

    @pytest.mark.parametrize("text, line", [
        ("stock s 1\ntime 0 1 1 euler", 1),
        ("time 0 1 1 euler\nflow f s to b rate 1", 2),
        ("time 0 1 1 euler\naux x 1", 2),
        ("time 0 1 1 euler\n\nwidget w", 3),
        ("time 0 1 1 euler\naux x = 1 +", 2),
    ])
    def test_syntax_errors(self, text, line):
        with pytest.raises(ModelFileError) as exc:
            loads(text)
        d = exc.value.diagnostics[0]
        assert (d.code, d.line) == ("SYNTAX_ERROR", line)

    def test_missing_time(self):
        with pytest.raises(ModelFileError) as exc:
            loads("stock s init 1")
        assert exc.value.diagnostics[0].code == "INVALID_TIME"
