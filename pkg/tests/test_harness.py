from __future__ import annotations

import io
import json
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from echosim.echo_protocol import VerifierConfig
from echosim.harness import (
    AdversarySpec, ConfigError, ProverSpec, ScenarioConfig, emit_trace, parse_scenario, run_scenario,
)
from echosim.harness.runner import verdict_vector
from echosim.harness.scenario import from_dict
from echosim.harness.trace import format_record, read_trace, render
from echosim.simkernel import MediaParams, Point, TraceRecord

MINIMAL = """{
  "verifiers": [{"position": [0, 0], "acceptance_radius": 50}],
  "provers": [{"identity": "alice", "actual_position": [10, 0]}]
}"""


def test_minimal_file_gets_documented_defaults():
    cfg = parse_scenario(MINIMAL)
    assert cfg.nonce_bits == 64 and cfg.variant == "echo" and cfg.mode == "plain"
    assert cfg.seed == 0 and cfg.horizon == 10.0 and cfg.jitter_window == 0.1
    assert cfg.media == MediaParams() and cfg.adversary is None
    p = cfg.provers[0]
    assert p.processing_delay == "min" and p.honesty == "honest" and p.claimed == Point(10, 0)


def _with(**changes):
    d = json.loads(MINIMAL)
    d.update(changes)
    return json.dumps(d, indent=2)


@pytest.mark.parametrize("text,field", [
    (_with(horizn=5), "horizn"),
    (_with(horizon=0), "horizon"),
    (_with(variant="twoway"), "variant"),
    (_with(seed=-1), "seed"),
    (_with(seed=2 ** 64), "seed"),
    (_with(nonce_bits=0), "nonce_bits"),
    (_with(verifiers=[{"position": [0, 0], "acceptance_radius": -1}]), "verifiers[0].acceptance_radius"),
    (_with(verifiers=[{"position": [0, 0], "radius": 5}]), "verifiers[0].radius"),
    (_with(provers=[{"identity": "a", "actual_position": [0, 0], "honesty": "sneaky"}]), "provers[0].honesty"),
    (_with(provers=[{"identity": "a", "actual_position": [0, 0], "processing_delay": "soon"}]),
     "provers[0].processing_delay"),
    (_with(media={"sound_speed": 1e9}), "media"),
    (_with(adversary={"position": [0, 0], "strategy": "impersonate", "target": "bob"}), "adversary.target"),
    (_with(adversary={"position": [0, 0], "strategy": "jam"}), "adversary.strategy"),
])
def test_constraint_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as err:
        parse_scenario(text)
    assert err.value.field == field
    assert field in str(err.value)


def test_duplicate_identity_names_it():
    text = _with(provers=[{"identity": "alice", "actual_position": [0, 0]},
                          {"identity": "alice", "actual_position": [1, 0]}])
    with pytest.raises(ConfigError, match="alice") as err:
        parse_scenario(text)
    assert err.value.field == "provers[1].identity"


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_scenario('{\n  "verifiers": [],\n  oops\n}')
    assert err.value.line == 3


def test_processing_delay_forms():
    for raw, want in (("min", "min"), (0.02, 0.02), ("11/15625", Fraction(11, 15625))):
        cfg = parse_scenario(_with(provers=[{"identity": "a", "actual_position": [0, 0], "processing_delay": raw}]))
        assert cfg.provers[0].processing_delay == want


def test_underbudget_delay_parses_then_aborts():
    cfg = parse_scenario(_with(provers=[{"identity": "a", "actual_position": [1, 0], "processing_delay": 1e-9}]))
    assert [v["verdict"] for v in run_scenario(cfg).verdicts] == ["abort"]


# -- round trip of the config through the trace header ---------------------------------------

coords = st.floats(-1e3, 1e3, allow_nan=False)
points = st.builds(Point, coords, coords)
delays = st.one_of(st.just("min"), st.floats(0, 1), st.fractions(0, 1, max_denominator=10 ** 6))

provers = st.builds(ProverSpec, identity=st.text("abcdef", min_size=1, max_size=4), actual_position=points,
                    claimed_location=st.one_of(st.none(), points), processing_delay=delays,
                    honesty=st.sampled_from(["honest", "zero-processing", "early-guess"]),
                    start_time=st.floats(0, 5), message=st.text(min_size=1, max_size=8),
                    message_size=st.one_of(st.none(), st.integers(1, 64)))


@st.composite
def scenarios(draw):
    ps = draw(st.lists(provers, min_size=1, max_size=3, unique_by=lambda p: p.identity))
    media = MediaParams(radio_speed=draw(st.floats(1e6, 1e9)), sound_speed=draw(st.floats(1, 1e3)))
    vs = tuple(VerifierConfig(draw(points), draw(st.floats(0.5, 500)), media)
               for _ in range(draw(st.integers(1, 3))))
    adv = draw(st.one_of(st.none(), st.builds(
        AdversarySpec, position=points, strategy=st.sampled_from(["impersonate", "overwrite", "timed-injection"]),
        power=st.floats(0.1, 100), reaction_time=st.floats(0, 0.1),
        target=st.sampled_from([None] + [p.identity for p in ps]),
        knowledge=st.lists(st.text("xyz", min_size=1, max_size=3), max_size=2).map(tuple),
        predicted_time=st.one_of(st.none(), st.floats(0, 1)),
        guess_window=st.one_of(st.none(), st.tuples(st.floats(0, 1), st.floats(1, 2))),
        aim=st.one_of(st.none(), st.integers(0, len(vs) - 1)))))
    return ScenarioConfig(verifiers=vs, provers=tuple(ps), media=media, adversary=adv,
                          nonce_bits=draw(st.integers(1, 512)), variant=draw(st.sampled_from(["echo", "oneway", "oneway+hash"])),
                          mode=draw(st.sampled_from(["plain", "shared-key", "public-key"])),
                          seed=draw(st.integers(0, 2 ** 64 - 1)), horizon=draw(st.floats(0.1, 100)),
                          jitter_window=draw(st.floats(0, 1)),
                          verification_validity=draw(st.one_of(st.none(), st.floats(0.1, 10))))


@given(scenarios())
def test_header_reparses_to_equal_config(cfg):
    buf = io.StringIO()
    emit_trace([], buf, header=cfg)
    header, records = read_trace(buf.getvalue().splitlines())
    assert records == [] and from_dict(header) == cfg


# -- trace format ----------------------------------------------------------------------------

def test_empty_trace_is_zero_lines():
    buf = io.StringIO()
    assert emit_trace([], buf) == 0 and buf.getvalue() == ""


def test_record_layout_and_time_precision():
    t = Fraction(1, 3)
    line = format_record(TraceRecord(t, "v0", "verdict", {"verdict": "reject", "reason": "too-slow"}))
    assert line == '{"time":0.33333333333333331,"node":"v0","kind":"verdict",' \
                   '"detail":{"verdict":"reject","reason":"too-slow"}}'
    assert float(json.loads(line)["time"]) == float(t)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_real_rendering_round_trips(x):
    assert float(render(x)) == x


def test_trace_is_time_ordered_and_carries_reasons():
    cfg = ScenarioConfig(verifiers=(VerifierConfig(Point(0, 0), 50.0),),
                         provers=(ProverSpec("a", Point(10, 0)), ProverSpec("b", Point(130, 0), Point(20, 0),
                                                                              honesty="zero-processing", start_time=0.2)))
    result = run_scenario(cfg)
    times = [r.time for r in result.trace]
    assert times == sorted(times)
    assert {v["reason"] for v in result.verdicts if v["verdict"] == "reject"} <= {"too-slow", "timeout", "nonce-mismatch"}
    assert any(v["verdict"] == "reject" for v in result.verdicts)


def test_run_outputs():
    cfg = ScenarioConfig(verifiers=(VerifierConfig(Point(0, 0), 50.0),), provers=(ProverSpec("a", Point(10, 0)),))
    result = run_scenario(cfg)
    assert verdict_vector(result) == ["v0:a:accept", "v0:a:grant"]
    grant = result.verdicts[-1]
    assert grant["sender"] == "p:a" and result.metrics["grants"] == 1 and result.metrics["adversary_grants"] == 0


def test_attack_grant_names_the_attacker_node():
    cfg = ScenarioConfig(verifiers=(VerifierConfig(Point(0, 0), 50.0),), provers=(ProverSpec("a", Point(10, 0)),),
                         adversary=AdversarySpec(Point(200, 200), "impersonate", tactics=("plain",)))
    grants = [v for v in run_scenario(cfg).verdicts if v["verdict"] == "grant"]
    assert {g["sender"] for g in grants} == {"p:a", "adv"}


def test_sweep_vector_is_reproducible():
    base = parse_scenario(MINIMAL)
    a = [verdict_vector(run_scenario(replace(base, seed=s))) for s in range(20)]
    b = [verdict_vector(run_scenario(replace(base, seed=s))) for s in range(20)]
    assert a == b
