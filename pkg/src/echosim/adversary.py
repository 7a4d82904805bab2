"""Adversary strategies: eavesdrop-and-impersonate, signal overwrite, timed injection.

The adversary obeys the same physics as everyone else (it transmits through
its own ``Port``), holds no key handles and never sees a verifier's nonce
generator.  Its only randomness is its own guessing stream.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, NamedTuple

from .access_control import Tag, WireRequest, f_plain
from .echo_protocol import (
    AccessRequest, Claim, EchoReply, Identity, LocationClaim, bytes_to_bits, deliver, show,
)
from .oneway import HashCommand, OneWayClaim, hash64
from .simkernel import (
    MediaParams, Medium, Node, Point, Reception, as_time, distance, propagation_delay, transmission_duration,
)

IMPERSONATE = "impersonate"
OVERWRITE = "overwrite"
TIMED_INJECTION = "timed-injection"
STRATEGIES = (IMPERSONATE, OVERWRITE, TIMED_INJECTION)
TACTICS = ("plain", "fake-tag", "replay")

# Frames a prover originates; these are what the overwrite strategy goes after.
PROVER_FRAMES = frozenset({"claim", "oneway-claim", "hash-command", "data", "access-request"})


@dataclass(frozen=True)
class AdversaryConfig:
    position: Point
    strategy: str
    power: float = 10.0
    reaction_time: float = 0.001
    knowledge: frozenset = frozenset()
    target: Identity | None = None
    forged_message: bytes = b"unlock"
    tactics: tuple = TACTICS
    # Schedule model for timed injection: the victim's claim and where it is aimed.
    victim_claim: LocationClaim | None = None
    predicted_time: float | None = None
    guess_window: tuple | None = None
    aim: Point | None = None
    frame: str = "oneway-claim"
    media: MediaParams = field(default_factory=MediaParams)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not self.power > 0:
            raise ValueError("adversary power must be positive")
        if self.reaction_time < 0:
            raise ValueError("reaction time must be nonnegative")


@dataclass
class Knowledge:
    identities: set = field(default_factory=set)
    bodies: list = field(default_factory=list)
    claims: dict = field(default_factory=dict)  # identity -> last overheard claim frame
    requests: list = field(default_factory=list)  # overheard wire requests, tags included


def eavesdrop(knowledge: Knowledge, message: Any) -> Knowledge:
    """Fold one overheard frame into what the adversary knows."""
    if message is None:
        return knowledge
    identity = getattr(message, "identity", None)
    if identity:
        knowledge.identities.add(identity)
    if message.kind in ("claim", "oneway-claim", "hash-command"):
        knowledge.claims[identity] = message
    if message.kind == "oneway-claim":
        knowledge.bodies.append(message.message)
    if message.kind == "access-request":
        knowledge.bodies.append(message.request.body)
        knowledge.requests.append(message.request)
    return knowledge


def impersonate(knowledge: Knowledge, identity: Identity, message: bytes) -> WireRequest | None:
    """The forged request f_plain(i, m); nothing to send if i was never learned."""
    if identity not in knowledge.identities:
        return None
    return f_plain(identity, message)


class Planned(NamedTuple):
    at: Fraction
    payload: str


def _fill(pattern: bytes, n: int) -> str:
    bits = bytes_to_bits(pattern or b"\xff")
    return (bits * (n // len(bits) + 1))[:n]


def overwrite(rx: Reception, victim_position: Point, own_position: Point, aim: Point, media: MediaParams,
              reaction_time: Any, forged_tail: bytes) -> Planned | None:
    """Plan a stronger burst that lands on the rest of an ongoing frame at ``aim``.

    The burst starts ``reaction_time`` after the frame was first heard and is
    cut so it ends no later than the frame does at the aimed receiver.
    Returns None when the frame will be over before the burst lands.
    """
    tx = rx.transmission
    speed = media.speed(tx.medium)
    bw = as_time(media.bandwidth(tx.medium))
    emitted = rx.arrival_start - propagation_delay(distance(victim_position, own_position), speed)
    at = rx.arrival_start + as_time(reaction_time)
    lands = at + propagation_delay(distance(own_position, aim), speed)
    frame_start = emitted + propagation_delay(distance(victim_position, aim), speed)
    skipped = max(0, math.ceil((lands - frame_start) * bw))
    remaining = len(tx.payload) - skipped
    if remaining <= 0:
        return None
    return Planned(at, _fill(forged_tail, remaining))


def timed_injection(predicted_time: Any, forged: Any, victim_position: Point, own_position: Point,
                    aim: Point, media: MediaParams) -> Planned:
    """Emit ``forged`` so that it reaches ``aim`` together with the victim's predicted claim."""
    lead = (propagation_delay(distance(victim_position, aim), media.radio_speed)
            - propagation_delay(distance(own_position, aim), media.radio_speed))
    return Planned(max(Fraction(0), as_time(predicted_time) + lead), forged.body())


class AdversaryNode(Node):
    def __init__(self, node_id: str, config: AdversaryConfig, rng: random.Random) -> None:
        super().__init__(node_id, config.position)
        self.config = config
        self.power = config.power
        self.rng = rng
        self.knowledge = Knowledge(identities=set(config.knowledge))
        if config.target is not None:
            self.knowledge.identities.add(config.target)
        self._requested: set = set()
        self._replayed: set = set()
        self._claimed: set = set()
        self._radio_free = Fraction(0)  # one transmitter: own radio frames never overlap

    def targets(self, identity: Identity) -> bool:
        if self.config.target is not None:
            return identity == self.config.target
        return identity in self.knowledge.identities

    # -- timed injection ------------------------------------------------------

    def start(self) -> None:
        cfg = self.config
        if cfg.strategy != TIMED_INJECTION or cfg.victim_claim is None:
            return
        if cfg.predicted_time is not None:
            guess = as_time(cfg.predicted_time)
        else:
            lo, hi = cfg.guess_window
            guess = as_time(self.rng.uniform(lo, hi))
        vc = cfg.victim_claim
        if cfg.frame == "claim":
            forged = Claim(vc)
        elif cfg.frame == "hash-command":
            forged = HashCommand(hash64(cfg.forged_message), vc.claimed_location, vc.processing_delay, vc.identity)
        else:
            forged = OneWayClaim(cfg.forged_message, vc.claimed_location, vc.processing_delay, vc.identity)
        aim = cfg.aim or vc.claimed_location
        plan = timed_injection(guess, forged, vc.claimed_location, self.position, aim, cfg.media)
        self.port.schedule(plan.at, self._inject, forged, plan, guess)

    def _inject(self, forged: Any, plan: Planned, guess: Fraction) -> None:
        self.port.record("state", event="inject", identity=show(forged.identity), guess=guess)
        self.port.transmit(Medium.RADIO, plan.payload, forged)

    # -- overwrite ------------------------------------------------------------

    def on_reception_start(self, rx: Reception) -> None:
        cfg = self.config
        tx = rx.transmission
        if cfg.strategy != OVERWRITE or tx.medium is not Medium.RADIO or tx.kind not in PROVER_FRAMES:
            return
        identity = tx.message.identity
        if not self.targets(identity):
            return
        claim = self.knowledge.claims.get(identity)
        victim_at = claim.claimed_location if claim is not None else (
            cfg.victim_claim.claimed_location if cfg.victim_claim is not None else None)
        if victim_at is None:
            return
        aim = cfg.aim or victim_at
        plan = overwrite(rx, victim_at, self.position, aim, cfg.media, cfg.reaction_time, cfg.forged_message)
        if plan is None:
            self.port.record("state", event="overwrite-miss", tx=tx.tx_id, identity=show(identity))
            return
        self.port.record("state", event="overwrite", tx=tx.tx_id, identity=show(identity), bits=len(plan.payload))
        self.port.transmit(Medium.RADIO, plan.payload, None, at=plan.at)

    # -- eavesdrop + impersonate ----------------------------------------------

    def on_receive(self, rx: Reception) -> None:
        msg = deliver(rx)
        if msg is None:
            return
        eavesdrop(self.knowledge, msg)
        if self.config.strategy != IMPERSONATE:
            return
        kind = msg.kind
        later = self.port.now + as_time(self.config.reaction_time)
        if kind == "access-challenge" and self.targets(msg.identity) and msg.identity not in self._requested:
            self._requested.add(msg.identity)
            self._forge_requests(msg.identity, later)
        elif kind == "access-request" and "replay" in self.config.tactics and rx.transmission.sender != self.node_id:
            key = rx.transmission.tx_id
            if key not in self._replayed:
                self._replayed.add(key)
                self.port.record("state", event="replay", identity=show(msg.identity), tx=key)
                self._send_request(msg.request, later)
        elif kind == "echo" and self.targets(msg.identity):
            self._oneway_impersonation(msg.identity, later)
        elif kind == "challenge" and msg.identity in self._claimed:
            # Answer the location check ourselves, as fast as physics allows.
            reply = EchoReply(msg.bits, msg.identity)
            self.port.transmit(Medium.ULTRASOUND, reply.body(), reply)

    def _forge_requests(self, identity: Identity, at: Fraction) -> None:
        tactics = self.config.tactics
        step = as_time(self.config.reaction_time)
        if "plain" in tactics:
            req = impersonate(self.knowledge, identity, self.config.forged_message)
            if req is not None:
                self.port.record("state", event="impersonate", identity=show(identity))
                self._send_request(req, at)
                at += step
        if "fake-tag" in tactics:
            # A lookalike tag object; nothing but a key handle yields a registered one.
            req = WireRequest(identity, self.config.forged_message, Tag(self.rng.getrandbits(32)))
            self.port.record("state", event="fake-tag", identity=show(identity))
            self._send_request(req, at)

    def _send_request(self, req: WireRequest, at: Fraction) -> None:
        frame = AccessRequest(req)
        self._send(frame, at)

    def _send(self, frame: Any, at: Fraction) -> None:
        at = max(at, self._radio_free)
        bits = frame.body()
        self._radio_free = at + transmission_duration(len(bits) + 1, self.config.media.radio_bandwidth)
        self.port.transmit(Medium.RADIO, bits, frame, at=at)

    def _oneway_impersonation(self, identity: Identity, at: Fraction) -> None:
        claim = self.knowledge.claims.get(identity)
        if claim is None or claim.kind != "oneway-claim" or identity in self._claimed:
            return
        self._claimed.add(identity)
        forged = OneWayClaim(self.config.forged_message, claim.claimed_location, claim.processing_delay, identity)
        self.port.record("state", event="impersonate", identity=show(identity))
        self._send(forged, at)
