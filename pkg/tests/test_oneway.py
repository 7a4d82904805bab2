from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from echosim.echo_protocol import (
    LocationClaim, Nonce, Verdict, VerifierConfig, VerifierSession, prover_run, verifier_decide,
)
from echosim.harness import ProverSpec, ScenarioConfig, run_scenario
from echosim.harness.runner import build
from echosim.oneway import (
    DataMessage, HashCommand, OneWayClaim, OneWayProverNode, digest_hex, hash64, hash_command_flow, oneway_decide,
)
from echosim.simkernel import InvalidParameter, Point, as_time
from oracles import fnv1a64_oracle


def test_hash64_known_values():
    assert hash64(b"") == 0xCBF29CE484222325
    assert hash64(b"a") == fnv1a64_oracle(b"a") == 0xAF63DC4C8601EC8C
    assert hash64(b"foobar") == 0x85944171F73967E8


@given(st.binary(max_size=300))
def test_hash64_matches_reference_recurrence(data):
    assert hash64(data) == fnv1a64_oracle(data)


def test_hash64_single_bit_flips_change_digest():
    rng = random.Random(5)
    data = bytearray(rng.randbytes(1024))
    base = hash64(bytes(data))
    for _ in range(10):
        k = rng.randrange(len(data) * 8)
        data[k // 8] ^= 1 << (k % 8)
        assert hash64(bytes(data)) != base
        data[k // 8] ^= 1 << (k % 8)


def test_frame_invariants():
    with pytest.raises(InvalidParameter):
        OneWayClaim(b"", Point(0, 0), 0, b"A")
    with pytest.raises(InvalidParameter):
        HashCommand(1 << 64, Point(0, 0), 0, b"A")
    assert len(HashCommand(5, Point(0, 0), 0, b"A").body()) == 64
    c = OneWayClaim(b"hi", Point(0, 0), 0, b"A")
    assert c.received(c.body()) is c
    assert c.received("x" + c.body()[1:]) is None
    assert DataMessage(b"A", b"hi").received("0" * 15 + "x").data is None


def _session(elapsed, got="1100"):
    c = LocationClaim(Point(10, 0), Fraction(1, 100), b"A")
    s = VerifierSession(c, Nonce("1100"), Fraction(0), message=b"m")
    if elapsed is not None:
        s.timer_finish, s.received_nonce = as_time(elapsed), got
    return s


@given(st.one_of(st.none(), st.fractions(0, 1)), st.sampled_from(["1100", "1101", "11x0"]))
def test_oneway_checks_equal_echo_checks(elapsed, got):
    cfg = VerifierConfig(Point(0, 0), 100.0)
    a, b = verifier_decide(_session(elapsed, got), cfg), oneway_decide(_session(elapsed, got), cfg)
    assert a.ok == b.ok
    if b.ok:
        assert b.outcome == "processed" and b.message == b"m"
    else:
        assert b.outcome == "dropped" and b.reason == a.reason


def test_hash_command_flow_outcomes():
    cmd = HashCommand(hash64(b"long"), Point(0, 0), 0, b"A")
    ok = Verdict("accept")
    assert hash_command_flow(cmd, ok, DataMessage(b"A", b"long")).outcome == "processed"
    assert hash_command_flow(cmd, ok, b"lonG").reason == "hash-mismatch"
    assert hash_command_flow(cmd, ok, DataMessage(b"A", None)).reason == "hash-mismatch"
    assert hash_command_flow(cmd, ok, None).reason == "window-expired"
    assert hash_command_flow(cmd, Verdict("reject", "too-slow"), b"long").reason == "too-slow"


@given(st.binary(min_size=1, max_size=64), st.data())
def test_any_single_bit_alteration_is_rejected(data, draw):
    cmd = HashCommand(hash64(data), Point(0, 0), 0, b"A")
    k = draw.draw(st.integers(0, len(data) * 8 - 1))
    altered = bytearray(data)
    altered[k // 8] ^= 1 << (k % 8)
    assert hash_command_flow(cmd, Verdict("accept"), bytes(altered)).reason == "hash-mismatch"


def scenario(variant="oneway", prover=None, **kw):
    return ScenarioConfig(verifiers=(VerifierConfig(Point(0, 0), 50.0),),
                          provers=(prover or ProverSpec("A", Point(10.0, 0), message="open door"),),
                          variant=variant, **kw)


def test_honest_oneway_processes_message():
    (v,) = run_scenario(scenario()).verdicts
    assert v["verdict"] == "processed" and v["digest"] == digest_hex(b"open door")


def test_far_prover_is_dropped():
    far = ProverSpec("A", Point(300.0, 0), Point(10.0, 0), message="x", honesty="zero-processing")
    (v,) = run_scenario(scenario(prover=far)).verdicts
    assert v["verdict"] == "dropped" and v["reason"] in ("too-slow", "timeout")


def test_hash_command_end_to_end_ten_kib():
    cfg = scenario("oneway+hash", ProverSpec("A", Point(10.0, 0), message_size=10 * 1024))
    result = run_scenario(cfg)
    assert [v["verdict"] for v in result.verdicts] == ["accept", "processed"]
    assert result.metrics["forged_accepts"] == 0


class SilentAfterEcho(OneWayProverNode):
    """Sends the hash command and echoes, but never the follow-up data."""

    def on_receive(self, rx):
        for out in prover_run(self.state, rx, self.media):
            self.port.transmit(out.medium, out.message.body(), out.message, at=out.at)


def test_hash_command_without_followup_expires():
    cfg = scenario("oneway+hash", ProverSpec("A", Point(10.0, 0), message="m"), jitter_window=0.0)
    w = build(cfg)
    node = w.provers["A"]
    node.__class__ = SilentAfterEcho
    w.sim.run(cfg.horizon)
    verdicts = [r.detail for r in w.sim.trace if r.kind == "verdict"]
    assert [(v["verdict"], v["reason"]) for v in verdicts] == [("accept", None), ("dropped", "window-expired")]
    expired = [r for r in w.sim.trace if r.kind == "verdict"][-1]
    accepted = [r for r in w.sim.trace if r.kind == "verdict"][0]
    assert expired.time - accepted.time == as_time(cfg.followup_window)


def test_jitter_is_seeded_and_bounded():
    starts = []
    for seed in range(30):
        r = run_scenario(scenario(seed=seed, jitter_window=0.1))
        emit = next(t for t in r.trace if t.kind == "emit")
        starts.append(emit.time)
        again = next(t for t in run_scenario(scenario(seed=seed, jitter_window=0.1)).trace if t.kind == "emit")
        assert again.time == emit.time
    assert all(0 <= t <= Fraction(1, 10) for t in starts) and len(set(starts)) > 25
