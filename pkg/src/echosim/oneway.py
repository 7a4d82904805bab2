"""One-way Echo: the application message rides in the claim broadcast and is
processed only if the location check that follows succeeds.

Long messages use a hash command instead: the short claim carries a 64-bit
digest, and the verifier later accepts one follow-up data frame matching it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Any, Sequence

from .echo_protocol import (
    HONEST, Identity, LocationClaim, ProverNode, Verdict, VerifierConfig, VerifierNode, VerifierSession,
    bits_to_bytes, bytes_to_bits, prover_run, show, verifier_decide,
)
from .simkernel import GARBLE, InvalidParameter, MediaParams, Medium, Point, Reception, as_time, transmission_duration

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x00000100000001B3
MASK64 = (1 << 64) - 1


def hash64(data: bytes) -> int:
    """64-bit FNV-1a."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def digest_hex(data: bytes | None) -> str | None:
    return None if data is None else f"{hash64(data):016x}"


@dataclass(frozen=True)
class OneWayClaim:
    message: bytes
    claimed_location: Point
    processing_delay: Any
    identity: Identity
    kind = "oneway-claim"

    def __post_init__(self) -> None:
        if not self.message:
            raise InvalidParameter("one-way message must be nonempty")
        object.__setattr__(self, "processing_delay", as_time(self.processing_delay))

    @property
    def claim(self) -> LocationClaim:
        return LocationClaim(self.claimed_location, self.processing_delay, self.identity)

    def body(self) -> str:
        return bytes_to_bits(self.message)

    def received(self, bits: str) -> OneWayClaim | None:
        message = bits_to_bytes(bits)
        if message is None:
            return None
        return self if message == self.message else replace(self, message=message)

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity),
                "claimed": [self.claimed_location.x, self.claimed_location.y],
                "delta_p": self.processing_delay, "digest": digest_hex(self.message)}


@dataclass(frozen=True)
class HashCommand:
    digest: int
    claimed_location: Point
    processing_delay: Any
    identity: Identity
    kind = "hash-command"

    def __post_init__(self) -> None:
        if not 0 <= self.digest <= MASK64:
            raise InvalidParameter("digest must be a 64-bit value")
        object.__setattr__(self, "processing_delay", as_time(self.processing_delay))

    @property
    def claim(self) -> LocationClaim:
        return LocationClaim(self.claimed_location, self.processing_delay, self.identity)

    def body(self) -> str:
        return f"{self.digest:064b}"

    def received(self, bits: str) -> HashCommand | None:
        if GARBLE in bits:
            return None
        return replace(self, digest=int(bits, 2))

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity),
                "claimed": [self.claimed_location.x, self.claimed_location.y],
                "delta_p": self.processing_delay, "digest": f"{self.digest:016x}"}


@dataclass(frozen=True)
class DataMessage:
    """Follow-up frame of the hash-command flow.  ``data`` is None if garbled."""

    identity: Identity
    data: bytes | None
    kind = "data"

    def body(self) -> str:
        return bytes_to_bits(self.data)

    def received(self, bits: str) -> DataMessage:
        data = bits_to_bytes(bits)
        return self if data == self.data else DataMessage(self.identity, data)

    def describe(self) -> dict:
        return {"kind": self.kind, "identity": show(self.identity), "digest": digest_hex(self.data)}


def oneway_decide(session: VerifierSession, cfg: VerifierConfig) -> Verdict:
    verdict = verifier_decide(session, cfg)
    if verdict.ok:
        return Verdict("processed", message=session.message)
    return Verdict("dropped", verdict.reason)


def hash_command_flow(cmd: HashCommand, command_verdict: Verdict, later: DataMessage | bytes | None) -> Verdict:
    """Outcome of a hash command given its verification verdict and the follow-up frame.

    ``later`` is None when nothing arrived inside the window.
    """
    if not command_verdict.ok:
        return Verdict("dropped", command_verdict.reason)
    if later is None:
        return Verdict("dropped", "window-expired")
    data = later.data if isinstance(later, DataMessage) else later
    if data is None or hash64(data) != cmd.digest:
        return Verdict("rejected", "hash-mismatch")
    return Verdict("processed", message=data)


class OneWayProverNode(ProverNode):
    def __init__(self, node_id: str, position: Point, claim: LocationClaim, media: MediaParams,
                 message: bytes, start_time: Any = 0, honesty: str = HONEST, rng: random.Random | None = None,
                 hashed: bool = False, jitter_window: Any = 0) -> None:
        super().__init__(node_id, position, claim, media, start_time, honesty, rng)
        self.message = message
        self.hashed = hashed
        self.jitter_window = as_time(jitter_window)
        self.sent_at = None

    def start(self) -> None:
        # Jitter keeps the initiation instant unpredictable.
        jitter = as_time(self.rng.uniform(0, float(self.jitter_window))) if self.jitter_window else 0
        self.port.schedule(self.start_time + jitter, self.initiate)

    def initiate(self) -> None:
        c = self.state.claim
        if self.hashed:
            msg = HashCommand(hash64(self.message), c.claimed_location, c.processing_delay, c.identity)
        else:
            msg = OneWayClaim(self.message, c.claimed_location, c.processing_delay, c.identity)
        self.sent_at = self.port.now
        self.port.transmit(Medium.RADIO, msg.body(), msg)
        self.state.awaiting = True

    def on_receive(self, rx: Reception) -> None:
        for out in prover_run(self.state, rx, self.media):
            self.port.transmit(out.medium, out.message.body(), out.message, at=out.at)
            if self.hashed:
                done = out.at + transmission_duration(len(out.message.body()), self.media.bandwidth(out.medium))
                data = DataMessage(self.identity, self.message)
                self.port.transmit(Medium.RADIO, data.body(), data, at=done)


class OneWayVerifierNode(VerifierNode):
    def __init__(self, node_id: str, index: int, peers: Sequence[VerifierConfig], nonce_bits: int,
                 rng: random.Random, hashed: bool = False, window: Any = 1.0) -> None:
        super().__init__(node_id, index, peers, nonce_bits, rng)
        self.hashed = hashed
        self.window = as_time(window)
        self.commands: dict[Identity, HashCommand] = {}
        self.buffered: dict[Identity, DataMessage] = {}
        self.awaiting_data: dict[Identity, tuple[HashCommand, Verdict]] = {}

    def dispatch(self, msg: Any, rx: Reception) -> None:
        if msg.kind == "oneway-claim" and not self.hashed:
            self.open_session(msg.claim, message=msg.message)
        elif msg.kind == "hash-command" and self.hashed:
            if self.open_session(msg.claim) is not None:
                self.commands[msg.identity] = msg
        elif msg.kind == "echo":
            self.handle_echo(msg)
        elif msg.kind == "data" and self.hashed:
            self.handle_data(msg)
        elif msg.kind == "access-request" and self.index == 0:
            # Nothing is accepted after verification in this variant.
            self.port.record("verdict", verdict="deny", reason="no-request-channel", identity=show(msg.identity),
                             sender=rx.transmission.sender, body=msg.request.body.hex(),
                             tx=rx.transmission.tx_id)

    def decide(self, session: VerifierSession) -> Verdict:
        if self.hashed:
            return verifier_decide(session, self.cfg)
        return oneway_decide(session, self.cfg)

    def verdict_extra(self, session: VerifierSession, verdict: Verdict) -> dict:
        if self.hashed:
            return {"stage": "command"}
        return {"digest": digest_hex(verdict.message)}

    def after_verdict(self, session: VerifierSession, verdict: Verdict) -> None:
        if not self.hashed:
            return
        identity = session.claim.identity
        cmd = self.commands.pop(identity)
        if not verdict.ok:
            self.buffered.pop(identity, None)
            self._flow_verdict(identity, hash_command_flow(cmd, verdict, None))
        elif identity in self.buffered:
            self._flow_verdict(identity, hash_command_flow(cmd, verdict, self.buffered.pop(identity)))
        else:
            entry = (cmd, verdict)
            self.awaiting_data[identity] = entry
            self.port.schedule(self.port.now + self.window, self._expire, identity, entry)

    def handle_data(self, msg: DataMessage) -> None:
        identity = msg.identity
        if identity in self.awaiting_data:
            cmd, verdict = self.awaiting_data.pop(identity)
            self._flow_verdict(identity, hash_command_flow(cmd, verdict, msg))
        elif identity in self.sessions and identity not in self.buffered:
            self.buffered[identity] = msg

    def _expire(self, identity: Identity, entry) -> None:
        if self.awaiting_data.get(identity) is entry:
            del self.awaiting_data[identity]
            cmd, verdict = entry
            self._flow_verdict(identity, hash_command_flow(cmd, verdict, None))

    def _flow_verdict(self, identity: Identity, verdict: Verdict) -> None:
        self.port.record("verdict", verdict=verdict.outcome, reason=verdict.reason, identity=show(identity),
                         stage="data", digest=digest_hex(verdict.message))

    def finalize(self) -> None:
        super().finalize()
        for identity, entry in list(self.awaiting_data.items()):
            self._expire(identity, entry)
