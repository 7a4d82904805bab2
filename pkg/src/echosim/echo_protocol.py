"""Prover and verifier state machines for the original Echo protocol.

The prover broadcasts a claim (location, processing delay), exactly one
verifier answers with a radio nonce and starts its timer, the prover echoes
the nonce over ultrasound, and the verifier accepts iff the echo matches and
arrived within ``d/c + d/s + delta_p``.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import TYPE_CHECKING, Any, NamedTuple, Sequence

from .simkernel import (
    GARBLE, InvalidParameter, MediaParams, Medium, Node, Point, Reception, as_time, distance,
    propagation_delay, transmission_duration,
)

if TYPE_CHECKING:
    from .access_control import AccessController, WireRequest

Identity = bytes

HONEST = "honest"
ZERO_PROCESSING = "zero-processing"
EARLY_GUESS = "early-guess"
HONESTY_MODES = (HONEST, ZERO_PROCESSING, EARLY_GUESS)


def show(identity: Identity) -> str:
    return identity.decode("utf-8", "backslashreplace")


def bytes_to_bits(data: bytes) -> str:
    return "".join(f"{b:08b}" for b in data)


def bits_to_bytes(bits: str) -> bytes | None:
    """Decode a bit string; ``None`` if it is garbled or not byte aligned."""
    if GARBLE in bits or len(bits) % 8:
        return None
    if not bits:
        return b""
    return int(bits, 2).to_bytes(len(bits) // 8, "big")


def _frame_check(*fields: Any) -> str:
    # CRC-32 over the header fields; stands in for the FCS of a control frame.
    return f"{zlib.crc32(repr(fields).encode()):032b}"


@dataclass(frozen=True)
class Nonce:
    bits: str

    def __post_init__(self) -> None:
        if not self.bits or not set(self.bits) <= {"0", "1"}:
            raise InvalidParameter("a nonce is a nonempty string of 0/1 bits")

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class LocationClaim:
    claimed_location: Point
    processing_delay: Fraction
    identity: Identity

    def __post_init__(self) -> None:
        object.__setattr__(self, "processing_delay", as_time(self.processing_delay))
        if self.processing_delay < 0:
            raise InvalidParameter("processing delay must be nonnegative")
        if not self.identity:
            raise InvalidParameter("identity must be nonempty")


@dataclass(frozen=True)
class VerifierConfig:
    position: Point
    acceptance_radius: float
    media: MediaParams = field(default_factory=MediaParams)

    def __post_init__(self) -> None:
        if not self.acceptance_radius > 0:
            raise InvalidParameter("acceptance radius must be positive")


@dataclass
class VerifierSession:
    claim: LocationClaim
    nonce: Nonce
    timer_start: Fraction
    timer_finish: Fraction | None = None
    received_nonce: str | None = None
    message: bytes | None = None  # one-way variants carry the application message here


@dataclass(frozen=True)
class Verdict:
    outcome: str
    reason: str | None = None
    message: bytes | None = None

    @property
    def ok(self) -> bool:
        return self.outcome in ("accept", "processed", "grant")


# -- wire messages ---------------------------------------------------------
#
# Every frame carries the identity it concerns in its envelope.  ``body()`` is
# the timed payload; ``received(bits)`` rebuilds the frame from the bits that
# actually arrived, or returns None when the frame fails its integrity check.


@dataclass(frozen=True)
class Claim:
    claim: LocationClaim
    kind = "claim"

    @property
    def identity(self) -> Identity:
        return self.claim.identity

    @property
    def claimed_location(self) -> Point:
        return self.claim.claimed_location

    def body(self) -> str:
        c = self.claim
        return _frame_check(self.kind, c.identity, c.claimed_location, c.processing_delay)

    def received(self, bits: str) -> Claim | None:
        return self if bits == self.body() else None

    def describe(self) -> dict:
        c = self.claim
        return {"kind": self.kind, "identity": show(c.identity),
                "claimed": [c.claimed_location.x, c.claimed_location.y], "delta_p": c.processing_delay}


@dataclass(frozen=True)
class Challenge:
    nonce: Nonce
    identity: Identity
    kind = "challenge"

    def body(self) -> str:
        return self.nonce.bits

    def received(self, bits: str) -> HeardChallenge:
        # The prover cannot tell captured bits from real ones; garbles pass through.
        return HeardChallenge(bits, self.identity)

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity)}


@dataclass(frozen=True)
class HeardChallenge:
    """A challenge as heard: arbitrary bits, possibly garbled."""

    bits: str
    identity: Identity
    kind = "challenge"


@dataclass(frozen=True)
class EchoReply:
    bits: str
    identity: Identity
    kind = "echo"

    def body(self) -> str:
        return self.bits

    def received(self, bits: str) -> EchoReply:
        return EchoReply(bits, self.identity)

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity)}


@dataclass(frozen=True)
class AccessChallenge:
    """Fresh nonce opening a grant window after successful verification."""

    nonce: Nonce
    identity: Identity
    kind = "access-challenge"

    def body(self) -> str:
        return self.nonce.bits

    def received(self, bits: str) -> AccessChallenge | None:
        return self if bits == self.nonce.bits else None

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity)}


@dataclass(frozen=True)
class AccessRequest:
    request: WireRequest
    kind = "access-request"

    @property
    def identity(self) -> Identity:
        return self.request.identity

    def body(self) -> str:
        return bytes_to_bits(self.request.body)

    def received(self, bits: str) -> AccessRequest | None:
        body = bits_to_bytes(bits)
        if body is None:
            return None
        if body == self.request.body:
            return self
        return AccessRequest(replace(self.request, body=body))

    def describe(self) -> dict:
        tag = self.request.tag
        return {"kind": self.kind, "identity": show(self.identity),
                "tag": None if tag is None else f"tag#{tag.token}"}


@dataclass(frozen=True)
class Grant:
    identity: Identity
    kind = "grant"

    def body(self) -> str:
        return _frame_check(self.kind, self.identity)

    def received(self, bits: str) -> Grant | None:
        return self if bits == self.body() else None

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity)}


@dataclass(frozen=True)
class Deny:
    identity: Identity
    reason: str = ""
    kind = "deny"

    def body(self) -> str:
        return _frame_check(self.kind, self.identity, self.reason)

    def received(self, bits: str) -> Deny | None:
        return self if bits == self.body() else None

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity), "reason": self.reason}


def deliver(rx: Reception) -> Any:
    """The frame a receiver extracts from a resolved reception, or None."""
    msg = rx.transmission.message
    if msg is None or not rx.synchronized:
        return None
    return msg.received(rx.payload_as_received)


# -- formulas ----------------------------------------------------------------

def generate_nonce(rng: random.Random, n: int) -> Nonce:
    if n < 1:
        raise InvalidParameter("nonce length must be at least one bit")
    return Nonce(format(rng.getrandbits(n), f"0{n}b"))


def min_processing_delay(n: int, media: MediaParams) -> Fraction:
    """Smallest valid delta_p: receive n bits by radio, send n bits by sound."""
    return (transmission_duration(n, media.radio_bandwidth)
            + transmission_duration(n, media.sound_bandwidth))


def roa_slack_speed(media: MediaParams) -> Fraction:
    # Distance a cheater gains per second of unused processing budget: cs/(c+s).
    c, s = as_time(media.radio_speed), as_time(media.sound_speed)
    return c * s / (c + s)


def roa_contains(cfg: VerifierConfig, location: Point, delta_p: Any) -> bool:
    """Whether ``location`` lies in the region of acceptance for ``delta_p``.

    The verifier's disk of radius R is shrunk by ``delta_p * cs/(c+s)`` so that
    an accepted run implies the true distance is at most R.
    """
    delta_p = as_time(delta_p)
    reach = as_time(distance(cfg.position, location)) + delta_p * roa_slack_speed(cfg.media)
    return reach <= as_time(cfg.acceptance_radius)


def select_verifier(claim: LocationClaim, verifiers: Sequence[VerifierConfig], n: int) -> VerifierConfig | None:
    """First verifier (in configuration order) able to check the claim, else None (abort)."""
    for cfg in verifiers:
        if (claim.processing_delay >= min_processing_delay(n, cfg.media)
                and roa_contains(cfg, claim.claimed_location, claim.processing_delay)):
            return cfg
    return None


def round_trip_bound(d: float, media: MediaParams, delta_p: Any) -> Fraction:
    return (propagation_delay(d, media.radio_speed) + propagation_delay(d, media.sound_speed)
            + as_time(delta_p))


def verifier_decide(session: VerifierSession, cfg: VerifierConfig) -> Verdict:
    if session.timer_finish is None:
        return Verdict("reject", "timeout")
    if session.received_nonce != session.nonce.bits:
        return Verdict("reject", "nonce-mismatch")
    claim = session.claim
    bound = round_trip_bound(distance(cfg.position, claim.claimed_location), cfg.media, claim.processing_delay)
    if session.timer_finish - session.timer_start > bound:
        return Verdict("reject", "too-slow")
    return Verdict("accept")


# -- prover ------------------------------------------------------------------

class Outgoing(NamedTuple):
    at: Fraction
    medium: Medium
    message: Any


@dataclass
class ProverState:
    claim: LocationClaim
    honesty: str = HONEST
    awaiting: bool = False


def prover_run(state: ProverState, rx: Reception, media: MediaParams) -> list[Outgoing]:
    """React to a resolved reception; returns the transmissions to schedule.

    An honest prover finishes its echo exactly ``delta_p`` after the challenge
    began to arrive.  A zero-processing cheat starts echoing as soon as the
    challenge has been heard in full.
    """
    msg = deliver(rx)
    if not (state.awaiting and msg is not None and msg.kind == "challenge"
            and msg.identity == state.claim.identity):
        return []
    state.awaiting = False
    bits = msg.bits
    if state.honesty == HONEST:
        at = rx.arrival_start + state.claim.processing_delay - transmission_duration(len(bits), media.sound_bandwidth)
        at = max(at, rx.arrival_end)
    elif state.honesty == ZERO_PROCESSING:
        at = rx.arrival_end
    else:
        return []
    return [Outgoing(at, Medium.ULTRASOUND, EchoReply(bits, state.claim.identity))]


class ProverNode(Node):
    """Initiates one Echo run and, in the echo variant, the access request that follows."""

    def __init__(self, node_id: str, position: Point, claim: LocationClaim, media: MediaParams,
                 start_time: Any = 0, honesty: str = HONEST, rng: random.Random | None = None,
                 request_builder=None) -> None:
        super().__init__(node_id, position)
        if honesty not in HONESTY_MODES:
            raise InvalidParameter(f"unknown honesty mode {honesty!r}")
        self.state = ProverState(claim, honesty)
        self.media = media
        self.start_time = as_time(start_time)
        self.rng = rng or random.Random(0)
        self.request_builder = request_builder
        self.request_sent = False

    @property
    def identity(self) -> Identity:
        return self.state.claim.identity

    def start(self) -> None:
        self.port.schedule(self.start_time, self.initiate)

    def initiate(self) -> None:
        msg = Claim(self.state.claim)
        self.port.transmit(Medium.RADIO, msg.body(), msg)
        self.state.awaiting = True

    def on_reception_start(self, rx: Reception) -> None:
        msg = rx.transmission.message
        if (self.state.honesty == EARLY_GUESS and self.state.awaiting and msg is not None
                and msg.kind == "challenge" and msg.identity == self.identity):
            # Guess the nonce instead of waiting for it.
            self.state.awaiting = False
            n = len(rx.transmission.payload)
            guess = format(self.rng.getrandbits(n), f"0{n}b")
            self.port.transmit(Medium.ULTRASOUND, guess, EchoReply(guess, self.identity))

    def on_receive(self, rx: Reception) -> None:
        for out in prover_run(self.state, rx, self.media):
            self.port.transmit(out.medium, out.message.body(), out.message, at=out.at)
        msg = deliver(rx)
        if msg is None or msg.identity != self.identity:
            return
        if msg.kind == "access-challenge" and self.request_builder and not self.request_sent:
            self.request_sent = True
            req = AccessRequest(self.request_builder(msg.nonce))
            self.port.transmit(Medium.RADIO, req.body(), req)
        elif msg.kind in ("grant", "deny"):
            self.port.record("state", event=msg.kind, identity=show(self.identity))


# -- verifier ----------------------------------------------------------------

class VerifierNode(Node):
    """A trusted verifier.  All verifiers know each other's configuration."""

    def __init__(self, node_id: str, index: int, peers: Sequence[VerifierConfig], nonce_bits: int,
                 rng: random.Random, access: AccessController | None = None) -> None:
        super().__init__(node_id, peers[index].position)
        self.index = index
        self.cfg = peers[index]
        self.peers = list(peers)
        self.nonce_bits = nonce_bits
        self.rng = rng
        self.access = access
        self.sessions: dict[Identity, VerifierSession] = {}

    def on_receive(self, rx: Reception) -> None:
        msg = deliver(rx)
        if msg is None:
            return
        self.dispatch(msg, rx)

    def dispatch(self, msg: Any, rx: Reception) -> None:
        if msg.kind == "claim":
            self.open_session(msg.claim)
        elif msg.kind == "echo":
            self.handle_echo(msg)
        elif msg.kind == "access-request" and self.access is not None:
            self.access.handle_request(self, msg, rx)

    def open_session(self, claim: LocationClaim, message: bytes | None = None) -> VerifierSession | None:
        if claim.identity in self.sessions:
            self.port.record("state", event="busy", identity=show(claim.identity))
            return None
        chosen = select_verifier(claim, self.peers, self.nonce_bits)
        if chosen is None:
            if self.index == 0:
                self.port.record("verdict", verdict="abort", reason="no-verifier", identity=show(claim.identity))
            return None
        if chosen is not self.cfg:
            return None
        nonce = generate_nonce(self.rng, self.nonce_bits)
        session = VerifierSession(claim, nonce, self.port.now, message=message)
        self.sessions[claim.identity] = session
        self.port.record("state", event="timer-start", identity=show(claim.identity), t_s=session.timer_start)
        msg = Challenge(nonce, claim.identity)
        self.port.transmit(Medium.RADIO, msg.body(), msg)
        d = distance(self.cfg.position, claim.claimed_location)
        self.port.schedule(session.timer_start + 2 * round_trip_bound(d, self.cfg.media, claim.processing_delay),
                           self._timeout, session)
        return session

    def handle_echo(self, msg: EchoReply) -> None:
        session = self.sessions.get(msg.identity)
        if session is None:
            return
        session.timer_finish = self.port.now
        session.received_nonce = msg.bits
        self.conclude(session)

    def _timeout(self, session: VerifierSession) -> None:
        if self.sessions.get(session.claim.identity) is session:
            self.conclude(session)

    def conclude(self, session: VerifierSession) -> Verdict:
        del self.sessions[session.claim.identity]
        verdict = self.decide(session)
        detail = {"verdict": verdict.outcome, "reason": verdict.reason, "identity": show(session.claim.identity),
                  "t_s": session.timer_start, "t_f": session.timer_finish, **self.verdict_extra(session, verdict)}
        self.port.record("verdict", **detail)
        self.after_verdict(session, verdict)
        return verdict

    def decide(self, session: VerifierSession) -> Verdict:
        return verifier_decide(session, self.cfg)

    def verdict_extra(self, session: VerifierSession, verdict: Verdict) -> dict:
        return {}

    def after_verdict(self, session: VerifierSession, verdict: Verdict) -> None:
        if verdict.ok and self.access is not None:
            self.access.on_verified(self, session.claim.identity)

    def finalize(self) -> None:
        """Close sessions still open when the horizon is reached."""
        for session in list(self.sessions.values()):
            self.conclude(session)
