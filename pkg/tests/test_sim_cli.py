"""Simulation traces, their serialization, and the command-line surface."""
import json
import subprocess
import sys

import pytest

from conftest import fixture_path

from abclang.cli import main
from abclang.semantics import system_steps
from abclang.simulator import json_to_value, simulate, trace_to_json, value_to_json
from abclang.terms import VFloat, VInt, VSet, VStr, VTuple, UNDEF, state_key
from abclang.validate import load_spec

from _gen import rand_value
import random


def load(path):
    src = open(path).read()
    spec, diags = load_spec(src, path)
    assert spec is not None, [d.render(color=False) for d in diags]
    return spec, src


class TestSimulate:
    def test_deterministic_given_seed(self):
        spec, src = load(fixture_path("travel-booking.abc"))
        names = spec.component_names()
        t1 = simulate(spec, src, 42, 200)
        t2 = simulate(spec, src, 42, 200)
        assert trace_to_json(t1, names) == trace_to_json(t2, names)

    def test_inert_spec_deadlocks_immediately(self):
        spec, src = load_spec("component C { attrs { } interface { } run 0 }"), None
        spec, diags = load_spec("component C { attrs { } interface { } run 0 }")
        assert not diags
        t = simulate(spec, "", 0)
        assert t.steps == [] and t.termination == "deadlock"

    def test_step_limit(self):
        src = (
            'proc L = ("tick")@(ff).L\n'
            "component C { attrs { } interface { } run L }"
        )
        spec, diags = load_spec(src)
        assert not diags
        t = simulate(spec, src, 0, max_steps=5)
        assert len(t.steps) == 5 and t.termination == "step-limit"

    def test_replay_validates(self):
        # every simulated step must be among the enabled successors
        spec, src = load(fixture_path("travel-booking.abc"))
        defs, ext = spec.defs_map(), spec.externs_map()
        t = simulate(spec, src, 7, 60)
        state = spec.initial_state()
        for step in t.steps:
            succs = system_steps(state, defs, ext)
            matches = [
                s for ev, s in succs
                if ev.sender == step.event.sender and ev.message == step.event.message
                and ev.receivers == step.event.receivers
            ]
            assert matches
            state = matches[0]
        assert state_key(state) == state_key(t.final_state)


class TestTraceJson:
    def test_empty_trace_is_header_only(self):
        spec, diags = load_spec("component C { attrs { } interface { } run 0 }")
        t = simulate(spec, "", 0)
        lines = trace_to_json(t, spec.component_names()).strip().splitlines()
        assert len(lines) == 1
        head = json.loads(lines[0])
        assert head["steps"] == 0 and head["termination"] == "deadlock"

    def test_fake_output_step_fields(self):
        spec, src = load(fixture_path("fake3.abc"))
        t = simulate(spec, src, 0, 10)
        lines = trace_to_json(t, spec.component_names()).strip().splitlines()
        step = json.loads(lines[1])
        assert step["receivers"] == []
        assert sorted(step["discarded"]) == ["W1", "W2", "W3"]
        assert list(step.keys()) == [
            "step", "sender", "message", "predicate", "receivers", "discarded", "updates",
        ]

    def test_corpus_first_step_round_trips(self):
        spec, src = load(fixture_path("travel-booking.abc"))
        t = simulate(spec, src, 42, 3)
        lines = trace_to_json(t, spec.component_names()).strip().splitlines()
        for line in lines[1:]:
            obj = json.loads(line)
            assert json.loads(json.dumps(obj)) == obj

    def test_value_json_round_trip(self):
        rng = random.Random(9)
        for _ in range(300):
            v = rand_value(rng)
            assert json_to_value(value_to_json(v)) == v
        for v in [VInt(-3), VFloat(2.5), VStr("x"), UNDEF,
                  VTuple((VInt(1), VStr("a"))), VSet.of([VInt(1), VInt(2)])]:
            assert json_to_value(value_to_json(v)) == v


class TestCli:
    def run_cli(self, *args):
        proc = subprocess.run(
            [sys.executable, "-m", "abclang.cli", *args],
            capture_output=True, text=True, env={"ABC_COLOR": "0", "PATH": "/usr/bin:/bin"},
        )
        return proc

    def test_parse_ok_exit_0(self):
        assert main(["parse", fixture_path("ping.abc")]) == 0

    def test_parse_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.abc"
        bad.write_text("component {")
        assert main(["parse", str(bad)]) == 2

    def test_validation_error_exit_2(self, tmp_path):
        bad = tmp_path / "dup.abc"
        bad.write_text("proc A = 0\nproc A = 0\n")
        assert main(["parse", str(bad)]) == 2

    def test_run_exit_0_and_output(self, capsys):
        assert main(["run", fixture_path("ping.abc"), "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "termination: deadlock" in out

    def test_run_eval_error_exit_4(self, tmp_path, capsys):
        bad = tmp_path / "err.abc"
        # the payload reads an attribute that does not exist
        bad.write_text(
            "component C { attrs { a = 1; } interface { } run (this.ghost)@(tt).0 }"
        )
        assert main(["run", str(bad)]) == 4

    def test_explore_exit_0(self, capsys):
        assert main(["explore", fixture_path("choice.abc")]) == 0
        assert "3 state(s), 2 transition(s)" in capsys.readouterr().out

    def test_explore_truncated_exit_3(self, capsys):
        assert main(["explore", fixture_path("choice.abc"), "--max-states", "1"]) == 3

    def test_explore_export_lts(self, tmp_path, capsys):
        out = tmp_path / "out.lts"
        assert main(["explore", fixture_path("ping.abc"), "--export-lts", str(out)]) == 0
        text = out.read_text()
        assert "STATE 0 " in text and "TRANS 0 1 A ping" in text

    def test_check_holds_exit_0(self, capsys):
        assert main(["check", fixture_path("ping.abc"), "--all"]) == 0
        out = capsys.readouterr().out
        assert "delivered: HOLDS" in out

    def test_check_single_property(self, capsys):
        assert main(["check", fixture_path("ping.abc"), "--property", "delivered"]) == 0

    def test_check_unknown_property_exit_2(self, capsys):
        assert main(["check", fixture_path("ping.abc"), "--property", "nope"]) == 2

    def test_check_failing_property_exit_1(self, tmp_path, capsys):
        f = tmp_path / "fail.abc"
        f.write_text(
            'proc P = ("m")@(ff).0\n'
            "component A { attrs { } interface { } run P }\n"
            'property never = reachable sent(A, "zzz")\n'
        )
        assert main(["check", str(f), "--all"]) == 1
        assert "never: FAILS" in capsys.readouterr().out

    def test_check_truncated_exit_3(self, capsys):
        assert main(["check", fixture_path("choice.abc"), "--all", "--max-states", "1"]) == 3

    def test_unknown_flag_exit_2(self):
        with pytest.raises(SystemExit) as ei:
            main(["explore", fixture_path("ping.abc"), "--bogus"])
        assert ei.value.code == 2

    def test_run_byte_identical_subprocess(self):
        outs = {
            self.run_cli("run", fixture_path("choice.abc"), "--seed", "3", "--format", "json").stdout
            for _ in range(3)
        }
        assert len(outs) == 1
