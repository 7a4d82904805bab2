"""Deterministic discrete-event kernel with a 2-D broadcast physical layer.

Simulated time is an exact rational (``fractions.Fraction``).  Positions and
distances are floats; a float distance enters timing arithmetic through its
exact rational value, so sums of delays never accumulate rounding and the
verifier's timing comparisons are exact.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

GARBLE = "x"
BIT_ALPHABET = frozenset("01" + GARBLE)

NodeId = str


class InvalidParameter(ValueError):
    """A physical quantity is outside its domain."""


def as_time(value: Any) -> Fraction:
    """Convert an int, float or Fraction to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"expected a real number, got {value!r}")
    if isinstance(value, float) and not math.isfinite(value):
        raise InvalidParameter(f"non-finite value {value!r}")
    return Fraction(value)


class Medium(enum.Enum):
    RADIO = "radio"
    ULTRASOUND = "ultrasound"


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        for v in (self.x, self.y):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidParameter(f"coordinate must be a finite real, got {v!r}")


@dataclass(frozen=True)
class MediaParams:
    radio_speed: float = 3e8
    sound_speed: float = 343.0
    radio_bandwidth: float = 1e6
    sound_bandwidth: float = 1e5

    def __post_init__(self) -> None:
        for name in ("radio_speed", "sound_speed", "radio_bandwidth", "sound_bandwidth"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                raise InvalidParameter(f"{name} must be a positive finite real, got {v!r}")
        if not self.radio_speed > self.sound_speed:
            raise InvalidParameter("radio_speed must exceed sound_speed")

    def speed(self, medium: Medium) -> float:
        return self.radio_speed if medium is Medium.RADIO else self.sound_speed

    def bandwidth(self, medium: Medium) -> float:
        return self.radio_bandwidth if medium is Medium.RADIO else self.sound_bandwidth


@dataclass(frozen=True, eq=False)
class Transmission:
    """One signal on one medium.  Compared by identity.

    ``message`` is the frame envelope (header fields such as the identity); it
    rides outside the capture model.  ``payload`` is the timed body whose bits
    can be overwritten by stronger overlapping signals.
    """

    sender: NodeId
    medium: Medium
    payload: str
    power: float
    emit_time: Fraction
    message: Any = None
    tx_id: int = -1

    def __post_init__(self) -> None:
        if len(self.payload) < 1:
            raise InvalidParameter("payload must carry at least one bit")
        if not set(self.payload) <= BIT_ALPHABET:
            raise InvalidParameter("payload must be a bit string")
        if not self.power > 0:
            raise InvalidParameter("power must be positive")
        if self.emit_time < 0:
            raise InvalidParameter("emit_time must be nonnegative")

    @property
    def kind(self) -> str:
        return getattr(self.message, "kind", "raw")


@dataclass(frozen=True)
class Reception:
    receiver: NodeId
    transmission: Transmission
    arrival_start: Fraction
    arrival_end: Fraction
    payload_as_received: str | None = None
    clean: bool | None = None
    synchronized: bool | None = None


@dataclass(frozen=True)
class Capture:
    """Outcome of capture resolution for one reception.

    ``clean``: every bit came from the reception's own transmission.
    ``synchronized``: the first bit did; otherwise the receiver never locks on.
    """

    payload: str
    clean: bool
    synchronized: bool


def distance(a: Point, b: Point) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def propagation_delay(d: float, speed: float) -> Fraction:
    if not speed > 0:
        raise InvalidParameter(f"speed must be positive, got {speed!r}")
    if d < 0:
        raise InvalidParameter(f"distance must be nonnegative, got {d!r}")
    return as_time(d) / as_time(speed)


def transmission_duration(bits: int, bandwidth: float) -> Fraction:
    if not bandwidth > 0:
        raise InvalidParameter(f"bandwidth must be positive, got {bandwidth!r}")
    if bits < 1:
        raise InvalidParameter("a transmission carries at least one bit")
    return Fraction(bits) / as_time(bandwidth)


def broadcast(tx: Transmission, nodes: Sequence[tuple[NodeId, Point]], media: MediaParams) -> list[Reception]:
    """Receptions of ``tx`` at every node other than its sender.

    The sender must appear in ``nodes`` (its position is the origin of the
    wavefront) unless there are no other nodes at all.
    """
    others = [(nid, pos) for nid, pos in nodes if nid != tx.sender]
    if not others:
        return []
    origin = next(pos for nid, pos in nodes if nid == tx.sender)
    speed = media.speed(tx.medium)
    duration = transmission_duration(len(tx.payload), media.bandwidth(tx.medium))
    out = []
    for nid, pos in others:
        start = tx.emit_time + propagation_delay(distance(origin, pos), speed)
        out.append(Reception(nid, tx, start, start + duration))
    return out


def resolve_overlap(receptions: Sequence[Reception], media: MediaParams) -> list[Capture]:
    """Per-bit capture at a single receiver on a single medium.

    Bit ``k`` of a reception is sampled at the midpoint of its bit window.  The
    strictly strongest transmission covering that instant supplies the bit; a
    tie for strongest yields ``GARBLE``.  Receptions that do not overlap simply
    come back clean.
    """
    if not receptions:
        return []
    media_set = {rx.transmission.medium for rx in receptions}
    if len(media_set) != 1:
        raise InvalidParameter("resolve_overlap works on one medium at a time")
    bw = as_time(media.bandwidth(media_set.pop()))
    half = Fraction(1, 2)

    results = []
    for target in receptions:
        n = len(target.transmission.payload)
        covers = []  # (lo, hi, power, payload, offset, is_self)
        for other in receptions:
            # Same medium => same bandwidth, so bit k of target samples bit k+offset of other.
            offset = math.floor((target.arrival_start - other.arrival_start) * bw + half)
            lo = max(0, -offset)
            hi = min(n, len(other.transmission.payload) - offset)
            if lo < hi:
                covers.append((lo, hi, other.transmission.power, other.transmission.payload, offset, other is target))
        cuts = sorted({c[0] for c in covers} | {c[1] for c in covers})
        pieces = []
        clean = True
        synchronized = False
        for a, b in zip(cuts, cuts[1:]):
            active = [c for c in covers if c[0] <= a < c[1]]
            top = max(c[2] for c in active)
            winners = [c for c in active if c[2] == top]
            if len(winners) > 1:
                pieces.append(GARBLE * (b - a))
                own = False
            else:
                _, _, _, payload, offset, own = winners[0]
                pieces.append(payload[a + offset:b + offset])
            clean = clean and own
            if a == 0:
                synchronized = own
        results.append(Capture("".join(pieces), clean, synchronized))
    return results


class EventQueue:
    """Min-heap of (time, sequence, action); equal times pop in insertion order."""

    def __init__(self) -> None:
        self._heap: list[tuple[Fraction, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    def push(self, time: Fraction, action: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (time, next(self._seq), action))

    def pop(self) -> tuple[Fraction, Callable[[], None]]:
        time, _, action = heapq.heappop(self._heap)
        return time, action

    def peek_time(self) -> Fraction:
        return self._heap[0][0]

    def __len__(self) -> int:
        return len(self._heap)


@dataclass(frozen=True)
class TraceRecord:
    time: Fraction
    node: NodeId
    kind: str  # emit | receive | state | verdict
    detail: dict = field(default_factory=dict)


class Node:
    """Base class for anything with a position and an antenna.

    Subclasses override the ``on_*`` hooks.  The kernel hands each node a
    ``Port``; nodes never see each other directly.
    """

    power: float = 1.0

    def __init__(self, node_id: NodeId, position: Point) -> None:
        self.node_id = node_id
        self.position = position
        self.port: Port | None = None

    def start(self) -> None:
        pass

    def on_reception_start(self, rx: Reception) -> None:
        pass

    def on_receive(self, rx: Reception) -> None:
        pass


class CausalityError(RuntimeError):
    pass


class Port:
    """A node's only handle on the kernel: clock, transmitter, timers, trace."""

    def __init__(self, sim: Simulator, node: Node) -> None:
        self._sim = sim
        self._node = node

    @property
    def now(self) -> Fraction:
        return self._sim.now

    def transmit(self, medium: Medium, payload: str, message: Any = None, at: Any = None,
                 power: float | None = None) -> Transmission:
        return self._sim.transmit(self._node, medium, payload, message, at, power)

    def schedule(self, at: Any, action: Callable[..., None], *args: Any) -> None:
        self._sim.schedule(at, action, *args)

    def record(self, kind: str, **detail: Any) -> None:
        self._sim.record(self._node.node_id, kind, detail)


def _describe(message: Any) -> dict:
    if message is None:
        return {"kind": "raw"}
    describe = getattr(message, "describe", None)
    return describe() if describe else {"kind": getattr(message, "kind", type(message).__name__)}


class Simulator:
    def __init__(self, media: MediaParams) -> None:
        self.media = media
        self.now = Fraction(0)
        self.queue = EventQueue()
        self.trace: list[TraceRecord] = []
        self.receptions: list[Reception] = []
        self._nodes: dict[NodeId, Node] = {}
        self._heard: dict[tuple[NodeId, Medium], list[Reception]] = defaultdict(list)
        self._tx_ids = itertools.count()

    def add_node(self, node: Node) -> Port:
        if node.node_id in self._nodes:
            raise InvalidParameter(f"duplicate node id {node.node_id!r}")
        self._nodes[node.node_id] = node
        node.port = Port(self, node)
        return node.port

    def schedule(self, at: Any, action: Callable[..., None], *args: Any) -> None:
        at = as_time(at)
        if at < self.now:
            raise CausalityError(f"cannot schedule at {float(at)!r} before now={float(self.now)!r}")
        self.queue.push(at, (lambda: action(*args)) if args else action)

    def record(self, node: NodeId, kind: str, detail: dict) -> None:
        self.trace.append(TraceRecord(self.now, node, kind, detail))

    def transmit(self, node: Node, medium: Medium, payload: str, message: Any = None,
                 at: Any = None, power: float | None = None) -> Transmission:
        at = self.now if at is None else as_time(at)
        if at < self.now:
            raise CausalityError("a node cannot emit in the past")
        tx = Transmission(node.node_id, medium, payload, node.power if power is None else power,
                          at, message, next(self._tx_ids))
        if at == self.now:
            self._emit(tx)
        else:
            self.schedule(at, self._emit, tx)
        return tx

    def _emit(self, tx: Transmission) -> None:
        duration = transmission_duration(len(tx.payload), self.media.bandwidth(tx.medium))
        self.record(tx.sender, "emit", {
            "tx": tx.tx_id, "medium": tx.medium.value, **_describe(tx.message),
            "bits": len(tx.payload), "power": tx.power, "end": tx.emit_time + duration,
        })
        nodes = [(nid, n.position) for nid, n in self._nodes.items()]
        for rx in broadcast(tx, nodes, self.media):
            self._heard[(rx.receiver, tx.medium)].append(rx)
            self.schedule(rx.arrival_start, self._begin, rx)
            self.schedule(rx.arrival_end, self._finish, rx)

    def _begin(self, rx: Reception) -> None:
        self._nodes[rx.receiver].on_reception_start(rx)

    def _finish(self, rx: Reception) -> None:
        heard = self._heard[(rx.receiver, rx.transmission.medium)]
        # Anything that can still overlap rx was emitted no later than rx ends, hence is already here.
        group = [o for o in heard if o.arrival_start < rx.arrival_end and rx.arrival_start < o.arrival_end]
        capture = resolve_overlap(group, self.media)[group.index(rx)]
        done = replace(rx, payload_as_received=capture.payload, clean=capture.clean,
                       synchronized=capture.synchronized)
        self.receptions.append(done)
        self.record(rx.receiver, "receive", {
            "tx": rx.transmission.tx_id, "from": rx.transmission.sender,
            "medium": rx.transmission.medium.value, "kind": rx.transmission.kind,
            "start": rx.arrival_start, "clean": capture.clean, "synchronized": capture.synchronized,
        })
        self._nodes[rx.receiver].on_receive(done)

    def run(self, horizon: Any = None) -> list[TraceRecord]:
        """Start every node, then drain events up to ``horizon`` (inclusive)."""
        limit = None if horizon is None else as_time(horizon)
        for node in self._nodes.values():
            node.start()
        while self.queue:
            if limit is not None and self.queue.peek_time() > limit:
                break
            self.now, action = self.queue.pop()
            action()
        return self.trace

