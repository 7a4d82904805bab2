"""Location-then-grant access control, message transforms and oracle crypto.

Cryptography is modelled as an oracle: a ``KeyRegistry`` hands out opaque
key, tag and ciphertext handles and is the only thing able to check them.
Whoever holds no key handle has no code path that produces a valid tag, so
"cannot forge without the key" holds by construction.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, NamedTuple

from .echo_protocol import (
    AccessChallenge, Deny, Grant, Identity, Nonce, Verdict, generate_nonce, show,
)
from .simkernel import Medium, Reception, as_time

PLAIN = "plain"
SHARED_KEY = "shared-key"
PUBLIC_KEY = "public-key"
MODES = (PLAIN, SHARED_KEY, PUBLIC_KEY)

# Frames carry the prover's identity unencrypted on broadcast media.
IDENTITY_IN_CLEAR = True


class CapabilityError(PermissionError):
    """The caller lacks the key handle the operation needs."""


class DecodeError(ValueError):
    """Input is not a ciphertext this key/identity can open."""


class SecretKey:
    """Opaque key handle.  Only the registry that issued it accepts it."""

    __slots__ = ("key_id", "_registry", "_identity")

    def __init__(self, key_id: int, registry: KeyRegistry | None = None, identity: Identity = b"") -> None:
        self.key_id = key_id
        self._registry = registry
        self._identity = identity

    def __repr__(self) -> str:
        return f"SecretKey(#{self.key_id})"


class Tag:
    __slots__ = ("token",)

    def __init__(self, token: int) -> None:
        self.token = token

    def __repr__(self) -> str:
        return f"Tag(#{self.token})"


class Ciphertext:
    __slots__ = ("token",)

    def __init__(self, token: int) -> None:
        self.token = token

    def __repr__(self) -> str:
        return f"Ciphertext(#{self.token})"


class KeyRegistry:
    def __init__(self) -> None:
        self._keys: dict[int, SecretKey] = {}
        self._shared: dict[Identity, int] = {}
        self._public: dict[Identity, int] = {}
        self._tags: dict[int, tuple[Tag, int, Identity, bytes, str]] = {}
        self._sealed: dict[int, tuple[Ciphertext, int, Identity, bytes]] = {}
        self._ids = itertools.count(1)

    def register_shared(self, identity: Identity) -> SecretKey:
        """Pre-share a key with ``identity``; the verifier side keeps the table."""
        key = SecretKey(next(self._ids), self, identity)
        self._keys[key.key_id] = key
        self._shared[identity] = key.key_id
        return key

    def generate_keypair(self, label: str) -> tuple[Identity, SecretKey]:
        """A private key and the public identity that verifies it."""
        key_id = next(self._ids)
        public = f"pk:{label}#{key_id}".encode()
        key = SecretKey(key_id, self, public)
        self._keys[key_id] = key
        self._public[public] = key_id
        return public, key

    def lookup(self, identity: Identity) -> int | None:
        return self._shared.get(identity)

    def _check_owner(self, key: Any, identity: Identity) -> SecretKey:
        if not isinstance(key, SecretKey) or self._keys.get(key.key_id) is not key or key._identity != identity:
            raise CapabilityError(f"no key handle for {show(identity)}")
        return key

    def tag(self, key: SecretKey, identity: Identity, body: bytes, challenge: Nonce) -> Tag:
        key = self._check_owner(key, identity)
        tag = Tag(next(self._ids))
        self._tags[tag.token] = (tag, key.key_id, identity, body, challenge.bits)
        return tag

    def check_tag(self, tag: Any, identity: Identity, body: bytes, challenge: Nonce | None, mode: str) -> bool:
        entry = self._tags.get(getattr(tag, "token", None))
        if entry is None or entry[0] is not tag or challenge is None:
            return False
        _, key_id, bound_identity, bound_body, bound_challenge = entry
        if (bound_identity, bound_body, bound_challenge) != (identity, body, challenge.bits):
            return False
        table = self._shared if mode == SHARED_KEY else self._public
        return table.get(identity) == key_id

    def bound_challenge(self, tag: Any) -> str | None:
        """Challenge bits a registry-issued tag was made for; None for anything else."""
        entry = self._tags.get(getattr(tag, "token", None))
        if entry is None or entry[0] is not tag:
            return None
        return entry[4]

    def seal(self, key: SecretKey, identity: Identity, message: bytes) -> Ciphertext:
        key = self._check_owner(key, identity)
        c = Ciphertext(next(self._ids))
        self._sealed[c.token] = (c, key.key_id, identity, message)
        return c

    def open(self, identity: Identity, c: Any, key: Any = None, public: bool = True) -> bytes:
        if not public:
            key = self._check_owner(key, identity)
        entry = self._sealed.get(getattr(c, "token", None))
        if entry is None or entry[0] is not c:
            raise DecodeError("not a ciphertext")
        _, key_id, bound_identity, message = entry
        if public:
            ok = bound_identity == identity and self._public.get(identity) == key_id
        else:
            ok = bound_identity == identity and key.key_id == key_id
        if not ok:
            raise DecodeError(f"ciphertext does not open under {show(identity)}")
        return message


# -- message transforms --------------------------------------------------------

@dataclass(frozen=True)
class WireRequest:
    identity: Identity
    body: bytes
    tag: Tag | None = None


def parse(req: WireRequest) -> tuple[Identity, bytes]:
    return req.identity, req.body


def f_plain(identity: Identity, message: bytes) -> WireRequest:
    """The unauthenticated transform (i, m); anyone who knows i can compute it."""
    return WireRequest(identity, message)


def f_keyed(identity: Identity, key: Any, message: bytes, challenge: Nonce) -> WireRequest:
    registry = getattr(key, "_registry", None) if isinstance(key, SecretKey) else None
    if registry is None:
        raise CapabilityError(f"no key handle for {show(identity)}")
    return WireRequest(identity, message, registry.tag(key, identity, message, challenge))


@dataclass
class AccessState:
    verified: dict[Identity, Fraction] = field(default_factory=dict)
    challenges: dict[Identity, Nonce] = field(default_factory=dict)
    validity: Fraction | None = None

    def is_verified(self, identity: Identity, now: Any) -> bool:
        at = self.verified.get(identity)
        if at is None:
            return False
        return self.validity is None or as_time(now) - at <= self.validity


def verify_request(req: WireRequest, mode: str, registry: KeyRegistry | None, state: AccessState,
                   now: Any = 0) -> Verdict:
    """Grant or deny one access request.

    In plain mode the identity is the only evidence, which is exactly what the
    impersonation attack abuses.
    """
    if not state.is_verified(req.identity, now):
        return Verdict("deny", "not-verified")
    if mode == PLAIN:
        return Verdict("grant")
    if req.tag is None or registry is None:
        return Verdict("deny", "bad-tag")
    if not registry.check_tag(req.tag, req.identity, req.body, state.challenges.get(req.identity), mode):
        return Verdict("deny", "bad-tag")
    return Verdict("grant")


class AccessController:
    """Verifier-side access backend shared by all (trusted) verifiers."""

    def __init__(self, mode: str, registry: KeyRegistry | None, rng: random.Random, nonce_bits: int,
                 validity: Any = None) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.registry = registry
        self.rng = rng
        self.nonce_bits = nonce_bits
        self.state = AccessState(validity=None if validity is None else as_time(validity))
        self.holders: dict[Identity, str] = {}

    def on_verified(self, verifier, identity: Identity) -> None:
        self.state.verified[identity] = verifier.port.now
        self.holders[identity] = verifier.node_id
        self._open_window(verifier, identity)

    def _open_window(self, verifier, identity: Identity) -> None:
        nonce = generate_nonce(self.rng, self.nonce_bits)
        self.state.challenges[identity] = nonce
        msg = AccessChallenge(nonce, identity)
        verifier.port.transmit(Medium.RADIO, msg.body(), msg)

    def handle_request(self, verifier, msg, rx: Reception) -> Verdict | None:
        identity = msg.identity
        holder = self.holders.get(identity)
        if (holder is None and verifier.index != 0) or (holder is not None and holder != verifier.node_id):
            return None
        req = msg.request
        verdict = verify_request(req, self.mode, self.registry, self.state, verifier.port.now)
        verifier.port.record("verdict", verdict=verdict.outcome, reason=verdict.reason, identity=show(identity),
                             sender=rx.transmission.sender, body=req.body.hex(), tx=rx.transmission.tx_id)
        reply = Grant(identity) if verdict.ok else Deny(identity, verdict.reason)
        verifier.port.transmit(Medium.RADIO, reply.body(), reply)
        if self.mode != PLAIN and self._burns_challenge(req):
            # Any genuine tag for this challenge uses it up, granted or not, so a
            # verbatim copy of the request cannot be cashed in later.
            self._open_window(verifier, identity)
        return verdict


    def _burns_challenge(self, req: WireRequest) -> bool:
        current = self.state.challenges.get(req.identity)
        return current is not None and self.registry.bound_challenge(req.tag) == current.bits


class ImpersonationConditions(NamedTuple):
    exposed: bool
    computable: bool
    accepted_any_time: bool

    @property
    def all_hold(self) -> bool:
        return self.exposed and self.computable and self.accepted_any_time


def impersonation_conditions(scenario: Any) -> ImpersonationConditions:
    """The three preconditions of the impersonation attack, read off a scenario.

    exposed: the identity travels in clear on a broadcast medium.
    computable: the request transform needs no key handle.
    accepted_any_time: requests arriving after verification are still honoured.
    """
    return ImpersonationConditions(
        exposed=IDENTITY_IN_CLEAR,
        computable=scenario.mode == PLAIN,
        accepted_any_time=scenario.variant == "echo",
    )


# -- cipher constructions ----------------------------------------------------------

class Cipher(NamedTuple):
    encrypt: Callable
    decrypt: Callable


def build_public_cipher(F: Callable, G: Callable) -> Cipher:
    """Public-key cipher from a transform: private key (i, k), public key i."""

    def encrypt(private_key: tuple[Identity, Any], m: bytes):
        i, k = private_key
        return F(i, k, m)

    def decrypt(public_key: Identity, c: Any) -> bytes:
        return G(public_key, c)

    return Cipher(encrypt, decrypt)


def build_symmetric_cipher(F: Callable, G: Callable) -> Cipher:
    """Symmetric cipher from a transform: the key is the pair (i, k)."""

    def encrypt(key: tuple[Identity, Any], m: bytes):
        i, k = key
        return F(i, k, m)

    def decrypt(key: tuple[Identity, Any], c: Any) -> bytes:
        i, k = key
        return G(i, k, c)

    return Cipher(encrypt, decrypt)


def oracle_public_transform(registry: KeyRegistry) -> tuple[Callable, Callable]:
    """(F, G) where F needs the private handle and G(i, F(i, k, m)) = m needs only i."""

    def F(i: Identity, k: Any, m: bytes) -> Ciphertext:
        return registry.seal(k, i, m)

    def G(i: Identity, c: Any) -> bytes:
        return registry.open(i, c, public=True)

    return F, G


def oracle_secret_transform(registry: KeyRegistry) -> tuple[Callable, Callable]:
    """(F, G) where both directions need the shared handle."""

    def F(i: Identity, k: Any, m: bytes) -> Ciphertext:
        return registry.seal(k, i, m)

    def G(i: Identity, k: Any, c: Any) -> bytes:
        return registry.open(i, c, key=k, public=False)

    return F, G
