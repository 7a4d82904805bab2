"""Scenario files: a strict JSON schema whose keys are the config field names.

Example::

    {
      "nonce_bits": 64,
      "verifiers": [{"position": [0, 0], "acceptance_radius": 50}],
      "provers": [{"identity": "alice", "actual_position": [10, 0]}]
    }

Every object rejects unknown keys.  Defaults are documented on the dataclasses
below and are filled in by the parser.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ..adversary import STRATEGIES, TACTICS
from ..access_control import MODES
from ..echo_protocol import HONESTY_MODES, VerifierConfig
from ..simkernel import InvalidParameter, MediaParams, Point

VARIANTS = ("echo", "oneway", "oneway+hash")


class ConfigError(ValueError):
    """Bad scenario input; carries the offending field path and, for syntax errors, the line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(field)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class ProverSpec:
    identity: str
    actual_position: Point
    claimed_location: Point | None = None  # None: claims its true position
    processing_delay: Any = "min"  # "min" (n/b0 + n/bi), a number, or an exact Fraction
    honesty: str = "honest"
    start_time: float = 0.0
    message: str = "open"
    message_size: int | None = None  # random body of this many bytes instead of ``message``

    @property
    def claimed(self) -> Point:
        return self.claimed_location or self.actual_position


@dataclass(frozen=True)
class AdversarySpec:
    position: Point
    strategy: str
    power: float = 10.0
    reaction_time: float = 0.001
    target: str | None = None
    knowledge: tuple = ()
    forged_message: str = "unlock"
    forged_size: int | None = None
    tactics: tuple = TACTICS
    predicted_time: float | None = None  # known schedule; None means guess within guess_window
    guess_window: tuple | None = None
    aim: int | None = None  # verifier index the signal is timed for


@dataclass(frozen=True)
class ScenarioConfig:
    verifiers: tuple
    provers: tuple
    media: MediaParams = field(default_factory=MediaParams)
    nonce_bits: int = 64
    adversary: AdversarySpec | None = None
    variant: str = "echo"
    mode: str = "plain"
    seed: int = 0
    horizon: float = 10.0
    jitter_window: float = 0.1
    verification_validity: float | None = None
    followup_window: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "verifiers", tuple(self.verifiers))
        object.__setattr__(self, "provers", tuple(self.provers))
        if not self.verifiers:
            raise ConfigError("at least one verifier is required", "verifiers")
        seen = set()
        for k, p in enumerate(self.provers):
            if p.identity in seen:
                raise ConfigError(f"duplicate prover identity {p.identity!r}", f"provers[{k}].identity")
            seen.add(p.identity)
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive", "horizon")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}", "variant")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}", "mode")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", "seed")
        if self.nonce_bits < 1:
            raise ConfigError("nonce_bits must be at least 1", "nonce_bits")
        adv = self.adversary
        if adv is not None:
            if adv.target is not None and adv.target not in seen:
                raise ConfigError(f"unknown target {adv.target!r}", "adversary.target")
            if adv.aim is not None and not 0 <= adv.aim < len(self.verifiers):
                raise ConfigError("aim must index a verifier", "adversary.aim")

    def prover(self, identity: str) -> ProverSpec:
        return next(p for p in self.provers if p.identity == identity)

    def to_dict(self) -> dict:
        """Plain-data form that ``from_dict`` maps back to an equal config."""
        d: dict[str, Any] = {
            "media": {k: getattr(self.media, k) for k in _MEDIA_KEYS},
            "nonce_bits": self.nonce_bits,
            "verifiers": [{"position": _pt_out(v.position), "acceptance_radius": v.acceptance_radius}
                          for v in self.verifiers],
            "provers": [_prover_out(p) for p in self.provers],
            "variant": self.variant,
            "mode": self.mode,
            "seed": self.seed,
            "horizon": self.horizon,
            "jitter_window": self.jitter_window,
            "verification_validity": self.verification_validity,
            "followup_window": self.followup_window,
        }
        if self.adversary is not None:
            d["adversary"] = _adversary_out(self.adversary)
        return d


_MEDIA_KEYS = ("radio_speed", "sound_speed", "radio_bandwidth", "sound_bandwidth")
_TOP_KEYS = {"media", "nonce_bits", "verifiers", "provers", "adversary", "variant", "mode", "seed",
             "horizon", "jitter_window", "verification_validity", "followup_window"}
_PROVER_KEYS = {"identity", "actual_position", "claimed_location", "processing_delay", "honesty",
                "start_time", "message", "message_size"}
_ADV_KEYS = {"position", "strategy", "power", "reaction_time", "target", "knowledge", "forged_message",
             "forged_size", "tactics", "predicted_time", "guess_window", "aim"}
_VERIFIER_KEYS = {"position", "acceptance_radius"}


def _pt_out(p: Point) -> list:
    return [p.x, p.y]


def _delay_out(v: Any) -> Any:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


def _prover_out(p: ProverSpec) -> dict:
    d = {"identity": p.identity, "actual_position": _pt_out(p.actual_position),
         "claimed_location": None if p.claimed_location is None else _pt_out(p.claimed_location),
         "processing_delay": _delay_out(p.processing_delay), "honesty": p.honesty,
         "start_time": p.start_time, "message": p.message, "message_size": p.message_size}
    return d


def _adversary_out(a: AdversarySpec) -> dict:
    return {"position": _pt_out(a.position), "strategy": a.strategy, "power": a.power,
            "reaction_time": a.reaction_time, "target": a.target, "knowledge": list(a.knowledge),
            "forged_message": a.forged_message, "forged_size": a.forged_size, "tactics": list(a.tactics),
            "predicted_time": a.predicted_time,
            "guess_window": None if a.guess_window is None else list(a.guess_window), "aim": a.aim}


# -- parsing -----------------------------------------------------------------------

def _obj(v: Any, path: str, keys: set, required: tuple = ()) -> dict:
    if not isinstance(v, dict):
        raise ConfigError("expected an object", path)
    unknown = sorted(set(v) - keys)
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}", f"{path}.{unknown[0]}" if path else unknown[0])
    for k in required:
        if k not in v:
            raise ConfigError("missing required field", f"{path}.{k}" if path else k)
    return v


def _num(v: Any, path: str, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", path)
    if positive and not v > 0:
        raise ConfigError("must be positive", path)
    if nonneg and v < 0:
        raise ConfigError("must be nonnegative", path)
    return v


def _int(v: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", path)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be at least {minimum}", path)
    return v


def _str(v: Any, path: str, choices: tuple | None = None) -> str:
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}", path)
    if choices is not None and v not in choices:
        raise ConfigError(f"must be one of {', '.join(choices)}", path)
    return v


def _pt(v: Any, path: str) -> Point:
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError("expected [x, y]", path)
    return Point(_num(v[0], f"{path}[0]"), _num(v[1], f"{path}[1]"))


def _delay(v: Any, path: str) -> Any:
    if v == "min":
        return v
    if isinstance(v, str):
        try:
            q = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"expected 'min', a number or 'p/q', got {v!r}", path) from None
        if q < 0:
            raise ConfigError("must be nonnegative", path)
        return q
    return _num(v, path, nonneg=True)


def _prover(v: Any, path: str) -> ProverSpec:
    d = _obj(v, path, _PROVER_KEYS, ("identity", "actual_position"))
    ident = _str(d["identity"], f"{path}.identity")
    if not ident:
        raise ConfigError("identity must be nonempty", f"{path}.identity")
    size = d.get("message_size")
    message = _str(d.get("message", "open"), f"{path}.message")
    if not message and size is None:
        raise ConfigError("message must be nonempty", f"{path}.message")
    return ProverSpec(
        identity=ident,
        actual_position=_pt(d["actual_position"], f"{path}.actual_position"),
        claimed_location=None if d.get("claimed_location") is None
        else _pt(d["claimed_location"], f"{path}.claimed_location"),
        processing_delay=_delay(d.get("processing_delay", "min"), f"{path}.processing_delay"),
        honesty=_str(d.get("honesty", "honest"), f"{path}.honesty", HONESTY_MODES),
        start_time=_num(d.get("start_time", 0.0), f"{path}.start_time", nonneg=True),
        message=message,
        message_size=None if size is None else _int(size, f"{path}.message_size", 1),
    )


def _adversary(v: Any, path: str) -> AdversarySpec:
    d = _obj(v, path, _ADV_KEYS, ("position", "strategy"))
    tactics = d.get("tactics", list(TACTICS))
    if not isinstance(tactics, list):
        raise ConfigError("expected a list", f"{path}.tactics")
    knowledge = d.get("knowledge", [])
    if not isinstance(knowledge, list):
        raise ConfigError("expected a list", f"{path}.knowledge")
    window = d.get("guess_window")
    if window is not None:
        if not isinstance(window, list) or len(window) != 2:
            raise ConfigError("expected [lo, hi]", f"{path}.guess_window")
        lo, hi = (_num(w, f"{path}.guess_window[{k}]", nonneg=True) for k, w in enumerate(window))
        if lo > hi:
            raise ConfigError("lo must not exceed hi", f"{path}.guess_window")
        window = (lo, hi)
    size = d.get("forged_size")
    target = d.get("target")
    predicted = d.get("predicted_time")
    aim = d.get("aim")
    return AdversarySpec(
        position=_pt(d["position"], f"{path}.position"),
        strategy=_str(d["strategy"], f"{path}.strategy", STRATEGIES),
        power=_num(d.get("power", 10.0), f"{path}.power", positive=True),
        reaction_time=_num(d.get("reaction_time", 0.001), f"{path}.reaction_time", nonneg=True),
        target=None if target is None else _str(target, f"{path}.target"),
        knowledge=tuple(_str(k, f"{path}.knowledge[{j}]") for j, k in enumerate(knowledge)),
        forged_message=_str(d.get("forged_message", "unlock"), f"{path}.forged_message"),
        forged_size=None if size is None else _int(size, f"{path}.forged_size", 1),
        tactics=tuple(_str(t, f"{path}.tactics[{j}]", TACTICS) for j, t in enumerate(tactics)),
        predicted_time=None if predicted is None else _num(predicted, f"{path}.predicted_time", nonneg=True),
        guess_window=window,
        aim=None if aim is None else _int(aim, f"{path}.aim", 0),
    )


def from_dict(d: Any) -> ScenarioConfig:
    d = _obj(d, "", _TOP_KEYS, ("verifiers", "provers"))
    media_d = _obj(d.get("media", {}), "media", set(_MEDIA_KEYS))
    try:
        media = MediaParams(**{k: _num(v, f"media.{k}", positive=True) for k, v in media_d.items()})
    except InvalidParameter as exc:
        raise ConfigError(str(exc), "media") from None
    for key in ("verifiers", "provers"):
        if not isinstance(d[key], list):
            raise ConfigError("expected a list", key)
    verifiers = []
    for k, v in enumerate(d["verifiers"]):
        path = f"verifiers[{k}]"
        vd = _obj(v, path, _VERIFIER_KEYS, ("position", "acceptance_radius"))
        verifiers.append(VerifierConfig(_pt(vd["position"], f"{path}.position"),
                                        _num(vd["acceptance_radius"], f"{path}.acceptance_radius", positive=True),
                                        media))
    provers = [_prover(p, f"provers[{k}]") for k, p in enumerate(d["provers"])]
    adv = d.get("adversary")
    validity = d.get("verification_validity")
    return ScenarioConfig(
        verifiers=verifiers,
        provers=provers,
        media=media,
        nonce_bits=_int(d.get("nonce_bits", 64), "nonce_bits", 1),
        adversary=None if adv is None else _adversary(adv, "adversary"),
        variant=_str(d.get("variant", "echo"), "variant", VARIANTS),
        mode=_str(d.get("mode", "plain"), "mode", MODES),
        seed=_int(d.get("seed", 0), "seed", 0),
        horizon=_num(d.get("horizon", 10.0), "horizon", positive=True),
        jitter_window=_num(d.get("jitter_window", 0.1), "jitter_window", nonneg=True),
        verification_validity=None if validity is None
        else _num(validity, "verification_validity", positive=True),
        followup_window=_num(d.get("followup_window", 1.0), "followup_window", positive=True),
    )


def parse_scenario(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error: {exc.msg}", line=exc.lineno) from None
    return from_dict(data)


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
