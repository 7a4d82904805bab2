"""Wire a scenario into a simulator, run it to the horizon and summarise."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from ..access_control import PLAIN, PUBLIC_KEY, SHARED_KEY, AccessController, KeyRegistry, f_keyed, f_plain, \
    impersonation_conditions
from ..adversary import AdversaryConfig, AdversaryNode
from ..echo_protocol import LocationClaim, ProverNode, VerifierNode, min_processing_delay, select_verifier, show
from ..oneway import OneWayProverNode, OneWayVerifierNode, digest_hex
from ..simkernel import GARBLE, Medium, Simulator, as_time
from .scenario import ScenarioConfig

ADVERSARY_NODE = "adv"
CLAIM_FRAMES = ("claim", "oneway-claim", "hash-command")


def stream(seed: int, name: str) -> random.Random:
    """Independent named random stream derived from the scenario seed."""
    return random.Random(f"{seed}:{name}")


@dataclass
class RunResult:
    config: ScenarioConfig
    trace: list
    verdicts: list
    metrics: dict
    receptions: list = field(default_factory=list, repr=False)


@dataclass
class _Wiring:
    sim: Simulator
    verifiers: list
    provers: dict  # label -> node
    identities: dict  # label -> wire identity
    bodies: dict  # label -> application bytes
    adversary: AdversaryNode | None


def prover_node_id(label: str) -> str:
    return f"p:{label}"


def _body(cfg: ScenarioConfig, label: str, text: str, size: int | None) -> bytes:
    if size is not None:
        return stream(cfg.seed, f"message:{label}").randbytes(size)
    return text.encode()


def build(cfg: ScenarioConfig) -> _Wiring:
    media = cfg.media
    sim = Simulator(media)
    registry = KeyRegistry() if cfg.mode != PLAIN else None
    hashed = cfg.variant == "oneway+hash"

    access = None
    if cfg.variant == "echo":
        access = AccessController(cfg.mode, registry, stream(cfg.seed, "access"), cfg.nonce_bits,
                                  cfg.verification_validity)
    verifiers = []
    for k in range(len(cfg.verifiers)):
        rng = stream(cfg.seed, f"nonce:v{k}")
        if cfg.variant == "echo":
            node = VerifierNode(f"v{k}", k, cfg.verifiers, cfg.nonce_bits, rng, access)
        else:
            node = OneWayVerifierNode(f"v{k}", k, cfg.verifiers, cfg.nonce_bits, rng, hashed, cfg.followup_window)
        verifiers.append(node)
        sim.add_node(node)

    provers, identities, bodies = {}, {}, {}
    for p in cfg.provers:
        key = None
        if cfg.mode == PUBLIC_KEY:
            identity, key = registry.generate_keypair(p.identity)
        else:
            identity = p.identity.encode()
            if cfg.mode == SHARED_KEY:
                key = registry.register_shared(identity)
        body = _body(cfg, p.identity, p.message, p.message_size)
        delta_p = min_processing_delay(cfg.nonce_bits, media) if p.processing_delay == "min" else p.processing_delay
        claim = LocationClaim(p.claimed, delta_p, identity)
        rng = stream(cfg.seed, f"prover:{p.identity}")
        if cfg.variant == "echo":
            if key is None:
                builder = (lambda i, m: lambda nonce: f_plain(i, m))(identity, body)
            else:
                builder = (lambda i, k, m: lambda nonce: f_keyed(i, k, m, nonce))(identity, key, body)
            node = ProverNode(prover_node_id(p.identity), p.actual_position, claim, media, p.start_time,
                              p.honesty, rng, builder)
        else:
            node = OneWayProverNode(prover_node_id(p.identity), p.actual_position, claim, media, body,
                                    p.start_time, p.honesty, rng, hashed, cfg.jitter_window)
        sim.add_node(node)
        provers[p.identity] = node
        identities[p.identity] = identity
        bodies[p.identity] = body

    adversary = None
    a = cfg.adversary
    if a is not None:
        target = None if a.target is None else identities[a.target]
        victim_claim = None if target is None else provers[a.target].state.claim
        if a.aim is not None:
            aim = cfg.verifiers[a.aim].position
        elif victim_claim is not None:
            chosen = select_verifier(victim_claim, cfg.verifiers, cfg.nonce_bits)
            aim = (chosen or cfg.verifiers[0]).position
        else:
            aim = cfg.verifiers[0].position
        window = a.guess_window
        if window is None and a.target is not None:
            start = cfg.prover(a.target).start_time
            window = (start, start + (cfg.jitter_window if cfg.variant != "echo" else 0.0))
        forged = _body(cfg, "adversary", a.forged_message, a.forged_size)
        acfg = AdversaryConfig(
            position=a.position, strategy=a.strategy, power=a.power, reaction_time=a.reaction_time,
            knowledge=frozenset(identities[k] for k in a.knowledge if k in identities)
            | frozenset(k.encode() for k in a.knowledge if k not in identities),
            target=target, forged_message=forged, tactics=a.tactics, victim_claim=victim_claim,
            predicted_time=a.predicted_time, guess_window=window, aim=aim,
            frame={"echo": "claim", "oneway": "oneway-claim", "oneway+hash": "hash-command"}[cfg.variant],
            media=media)
        adversary = AdversaryNode(ADVERSARY_NODE, acfg, stream(cfg.seed, "adversary"))
        sim.add_node(adversary)
    return _Wiring(sim, verifiers, provers, identities, bodies, adversary)


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    w = build(cfg)
    horizon = as_time(cfg.horizon)
    w.sim.run(horizon)
    w.sim.now = max(w.sim.now, horizon)
    for v in w.verifiers:
        v.finalize()
    verdicts = [{"time": r.time, "node": r.node, **r.detail} for r in w.sim.trace if r.kind == "verdict"]
    return RunResult(cfg, w.sim.trace, verdicts, summarize(cfg, w, verdicts), w.sim.receptions)


def summarize(cfg: ScenarioConfig, w: _Wiring, verdicts: list) -> dict:
    counts = Counter(v["verdict"] for v in verdicts)
    legit_digest = {show(w.identities[k]): digest_hex(b) for k, b in w.bodies.items()}
    legit_body = {show(w.identities[k]): b.hex() for k, b in w.bodies.items()}
    legit_node = {show(w.identities[k]): prover_node_id(k) for k in w.bodies}

    def forged(v: dict) -> bool:
        if v["verdict"] == "grant":
            return v.get("sender") != legit_node.get(v["identity"]) or v.get("body") != legit_body.get(v["identity"])
        if v["verdict"] == "processed":
            return v.get("digest") != legit_digest.get(v["identity"])
        return False

    adv_requests = [v for v in verdicts if v.get("sender") == ADVERSARY_NODE]
    verifier_ids = {v.node_id for v in w.verifiers}
    prover_ids = {n.node_id for n in w.provers.values()}
    at_verifiers = [rx for rx in w.sim.receptions
                    if rx.receiver in verifier_ids and rx.transmission.medium is Medium.RADIO]
    spliced = sum(1 for rx in at_verifiers
                  if rx.transmission.sender in prover_ids and rx.synchronized and not rx.clean
                  and GARBLE not in rx.payload_as_received)
    target_node = None
    if cfg.adversary is not None and cfg.adversary.target is not None:
        target_node = prover_node_id(cfg.adversary.target)
    injection_hits = sum(1 for rx in at_verifiers
                         if rx.transmission.sender == target_node and rx.transmission.kind in CLAIM_FRAMES
                         and not rx.clean)
    adv_events = Counter(r.detail.get("event") for r in w.sim.trace
                         if r.node == ADVERSARY_NODE and r.kind == "state")
    return {
        "accepts": counts["accept"],
        "rejects": counts["reject"],
        "aborts": counts["abort"],
        "grants": counts["grant"],
        "denies": counts["deny"],
        "processed": counts["processed"],
        "dropped": counts["dropped"],
        "hash_rejections": sum(1 for v in verdicts if v.get("reason") == "hash-mismatch"),
        "adversary_requests": len(adv_requests),
        "adversary_grants": sum(1 for v in adv_requests if v["verdict"] == "grant"),
        "forged_accepts": sum(1 for v in verdicts if forged(v)),
        "spliced": spliced,
        "overwrite_attempts": adv_events["overwrite"],
        "overwrite_misses": adv_events["overwrite-miss"],
        "injection_hits": injection_hits,
        "conditions": impersonation_conditions(cfg)._asdict(),
    }


def verdict_vector(result: RunResult) -> list:
    """Compact per-run outcome, one entry per verdict record."""
    return [f"{v['node']}:{v['identity']}:{v['verdict']}" + (f":{v['reason']}" if v.get("reason") else "")
            for v in result.verdicts]
