from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from echosim.access_control import (
    PLAIN, PUBLIC_KEY, SHARED_KEY, AccessState, CapabilityError, Ciphertext, DecodeError, KeyRegistry, SecretKey,
    Tag, WireRequest, build_public_cipher, build_symmetric_cipher, f_keyed, f_plain, impersonation_conditions,
    oracle_public_transform, oracle_secret_transform, parse, verify_request,
)
from echosim.echo_protocol import Nonce
from echosim.harness.grid import cell_scenario

N1, N2 = Nonce("1010"), Nonce("0110")


def verified(identity, challenge=N1, validity=None):
    st_ = AccessState(validity=validity)
    st_.verified[identity] = Fraction(0)
    st_.challenges[identity] = challenge
    return st_


def test_f_plain_is_the_pair():
    req = f_plain(b"A", b"open")
    assert (req.identity, req.body, req.tag) == (b"A", b"open", None)
    assert f_plain(b"A", b"open") == req  # the adversary computes the same wire form
    assert parse(req) == (b"A", b"open")


@given(st.binary(min_size=1, max_size=16), st.binary(max_size=32))
def test_retrievability(identity, body):
    reg = KeyRegistry()
    key = reg.register_shared(identity)
    for req in (f_plain(identity, body), f_keyed(identity, key, body, N1)):
        assert parse(req) == (identity, body)


def test_keyed_tags_verify_and_bind_challenge():
    reg = KeyRegistry()
    key = reg.register_shared(b"A")
    req = f_keyed(b"A", key, b"open", N1)
    assert verify_request(req, SHARED_KEY, reg, verified(b"A")).outcome == "grant"
    assert verify_request(req, SHARED_KEY, reg, verified(b"A", N2)).reason == "bad-tag"
    other = WireRequest(b"A", b"close", req.tag)
    assert verify_request(other, SHARED_KEY, reg, verified(b"A")).reason == "bad-tag"


def test_no_key_no_tag():
    reg = KeyRegistry()
    reg.register_shared(b"A")
    for bogus in (None, object(), SecretKey(1), SecretKey(1, reg, b"A")):
        with pytest.raises(CapabilityError):
            f_keyed(b"A", bogus, b"open", N1)
    # The handle is bound to its identity.
    with pytest.raises(CapabilityError):
        f_keyed(b"B", reg.register_shared(b"C"), b"open", N1)
    # A lookalike tag carrying a valid-looking token is still not the registered object.
    real = f_keyed(b"A", reg.register_shared(b"A"), b"open", N1)
    fake = WireRequest(b"A", b"open", Tag(real.tag.token))
    assert verify_request(fake, SHARED_KEY, reg, verified(b"A")).reason == "bad-tag"


def test_mode_semantics():
    reg = KeyRegistry()
    assert verify_request(f_plain(b"A", b"x"), PLAIN, None, verified(b"A")).outcome == "grant"
    assert verify_request(f_plain(b"A", b"x"), SHARED_KEY, reg, verified(b"A")).reason == "bad-tag"
    for mode in (PLAIN, SHARED_KEY, PUBLIC_KEY):
        assert verify_request(f_plain(b"B", b"x"), mode, reg, verified(b"A")).reason == "not-verified"


def test_public_key_identity_is_the_verification_handle():
    reg = KeyRegistry()
    pub, key = reg.generate_keypair("alice")
    req = f_keyed(pub, key, b"open", N1)
    assert verify_request(req, PUBLIC_KEY, reg, verified(pub)).outcome == "grant"
    # A shared-key table does not know this identity.
    assert verify_request(req, SHARED_KEY, reg, verified(pub)).reason == "bad-tag"


def test_validity_window():
    st_ = verified(b"A", validity=Fraction(1))
    assert st_.is_verified(b"A", 1) and not st_.is_verified(b"A", Fraction(3, 2))


def test_impersonation_condition_table():
    base = impersonation_conditions(cell_scenario("baseline", "impersonate", 0))
    assert tuple(base) == (True, True, True) and base.all_hold
    assert not impersonation_conditions(cell_scenario("shared-key", "impersonate", 0)).computable
    assert not impersonation_conditions(cell_scenario("public-key", "impersonate", 0)).computable
    assert not impersonation_conditions(cell_scenario("one-way", "impersonate", 0)).accepted_any_time


# -- cipher constructions ----------------------------------------------------------------

def test_public_cipher_roundtrip_and_capabilities():
    reg = KeyRegistry()
    pub, key = reg.generate_keypair("alice")
    other_pub, other_key = reg.generate_keypair("bob")
    enc, dec = build_public_cipher(*oracle_public_transform(reg))
    rng = random.Random(3)
    for _ in range(100):
        m = rng.randbytes(rng.randint(0, 40))
        assert dec(pub, enc((pub, key), m)) == m
    c = enc((pub, key), b"hello")
    with pytest.raises(DecodeError):
        dec(other_pub, c)
    with pytest.raises(DecodeError):
        dec(pub, Ciphertext(c.token))
    with pytest.raises(DecodeError):
        dec(pub, b"not a ciphertext")
    with pytest.raises(CapabilityError):
        enc((pub, other_key), b"hello")
    with pytest.raises(CapabilityError):
        enc((pub, None), b"hello")


def test_symmetric_cipher_roundtrip_and_capabilities():
    reg = KeyRegistry()
    key = reg.register_shared(b"A")
    other = reg.register_shared(b"B")
    enc, dec = build_symmetric_cipher(*oracle_secret_transform(reg))
    rng = random.Random(4)
    for _ in range(100):
        m = rng.randbytes(rng.randint(0, 40))
        assert dec((b"A", key), enc((b"A", key), m)) == m
    c = enc((b"A", key), b"hi")
    with pytest.raises(CapabilityError):
        dec((b"A", None), c)
    with pytest.raises(CapabilityError):
        dec((b"A", other), c)  # handle belongs to B
    with pytest.raises(DecodeError):
        dec((b"B", other), c)  # cross-key attempt
    with pytest.raises(CapabilityError):
        enc((b"A", SecretKey(key.key_id)), b"hi")
