"""Standard experiment scenarios and the attack-success grid.

Cells are {baseline, one-way, shared-key, public-key}; strategies are the
three adversary strategies.  ``EXPECTED`` is the pattern the grid should show
with the default (short-message) geometry.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction

from ..echo_protocol import HONESTY_MODES, VerifierConfig, min_processing_delay, roa_slack_speed
from ..simkernel import MediaParams, Point, as_time, distance
from .runner import run_scenario
from .scenario import AdversarySpec, ProverSpec, ScenarioConfig

CELLS = {
    "baseline": ("echo", "plain"),
    "one-way": ("oneway", "plain"),
    "shared-key": ("echo", "shared-key"),
    "public-key": ("echo", "public-key"),
}
STRATEGY_NAMES = ("impersonate", "overwrite", "timed-injection")

# never: 0 successes; always: every run; rare: a few runs, at about the chance rate.
EXPECTED = {(cell, s): "never" for cell in CELLS for s in STRATEGY_NAMES}
EXPECTED[("baseline", "impersonate")] = "always"
EXPECTED[("one-way", "timed-injection")] = "rare"

VERIFIER = Point(0.0, 0.0)
PROVER = Point(20.0, 0.0)
FAR_ADVERSARY = Point(400.0, 300.0)


def cell_scenario(cell: str, strategy: str, seed: int, tactics: tuple | None = None) -> ScenarioConfig:
    variant, mode = CELLS[cell]
    adv = AdversarySpec(position=FAR_ADVERSARY, strategy=strategy, target="alice")
    if tactics is not None:
        adv = replace(adv, tactics=tactics)
    return ScenarioConfig(
        verifiers=(_verifier(VERIFIER, 50.0),),
        provers=(ProverSpec("alice", PROVER, start_time=0.01),),
        adversary=adv, variant=variant, mode=mode, seed=seed, horizon=5.0,
    )


def _verifier(position: Point, radius: float) -> VerifierConfig:
    return VerifierConfig(position, radius)


def succeeded(metrics: dict) -> bool:
    """An attack run succeeds if anything the adversary authored was granted or processed."""
    return metrics["adversary_grants"] > 0 or metrics["forged_accepts"] > 0


@dataclass
class CellResult:
    cell: str
    strategy: str
    runs: int
    successes: int
    adversary_grants: int

    @property
    def rate(self) -> float:
        return self.successes / self.runs if self.runs else 0.0

    def matches(self, expected: str) -> bool:
        if expected == "always":
            return self.successes == self.runs
        if expected == "never":
            return self.successes == 0
        return self.successes < self.runs


def run_matrix(runs: int = 20, seed_base: int = 0) -> list[CellResult]:
    out = []
    for cell in CELLS:
        for strategy in STRATEGY_NAMES:
            wins = grants = 0
            for k in range(runs):
                m = run_scenario(cell_scenario(cell, strategy, seed_base + k)).metrics
                wins += succeeded(m)
                grants += m["adversary_grants"]
            out.append(CellResult(cell, strategy, runs, wins, grants))
    return out


def format_matrix(results: list[CellResult]) -> str:
    lines = [f"{'cell':<12}" + "".join(f"{s:>18}" for s in STRATEGY_NAMES)]
    by_cell: dict[str, dict[str, CellResult]] = {}
    for r in results:
        by_cell.setdefault(r.cell, {})[r.strategy] = r
    for cell, row in by_cell.items():
        cells = []
        for s in STRATEGY_NAMES:
            r = row[s]
            flag = "" if r.matches(EXPECTED[(cell, s)]) else " !"
            cells.append(f"{r.successes}/{r.runs}{flag}".rjust(18))
        lines.append(f"{cell:<12}" + "".join(cells))
    return "\n".join(lines)


# -- overwrite crossover -------------------------------------------------------------

CROSS_VERIFIER = Point(0.0, 0.0)
CROSS_PROVER = Point(100.0, 0.0)
CROSS_ADVERSARY = Point(50.0, 86.60254037844386)  # 100 m from both


def overwrite_scenario(message_bytes: int, seed: int, hashed: bool = False,
                       reaction_time: float = 0.001) -> ScenarioConfig:
    return ScenarioConfig(
        verifiers=(_verifier(CROSS_VERIFIER, 150.0),),
        provers=(ProverSpec("alice", CROSS_PROVER, message_size=message_bytes),),
        adversary=AdversarySpec(position=CROSS_ADVERSARY, strategy="overwrite", target="alice",
                                reaction_time=reaction_time, forged_message="evil"),
        variant="oneway+hash" if hashed else "oneway", seed=seed, horizon=3.0, jitter_window=0.0,
    )


# -- timed injection ---------------------------------------------------------------------

def injection_scenario(seed: int, jitter_window: float = 0.1, forged_bytes: int = 125,
                       victim_bytes: int = 8, predicted_time: float | None = 0.05) -> ScenarioConfig:
    """Victim starts uniformly in [0, jitter_window]; the adversary fires at ``predicted_time``.

    With ``predicted_time=None`` it guesses uniformly over the same window.
    """
    return ScenarioConfig(
        verifiers=(_verifier(VERIFIER, 50.0),),
        provers=(ProverSpec("alice", PROVER, message_size=victim_bytes),),
        adversary=AdversarySpec(position=Point(30.0, 40.0), strategy="timed-injection", target="alice",
                                forged_size=forged_bytes, predicted_time=predicted_time,
                                guess_window=(0.0, jitter_window)),
        variant="oneway", seed=seed, horizon=2.0, jitter_window=jitter_window,
    )


def injection_expectation(cfg: ScenarioConfig) -> float:
    """Chance that the forged claim overlaps the victim's at the verifier: (D_forged + D_victim) / W."""
    bw = cfg.media.radio_bandwidth
    victim = cfg.provers[0]
    forged = cfg.adversary.forged_size * 8 / bw
    own = victim.message_size * 8 / bw
    return min(1.0, (forged + own) / cfg.jitter_window)


# -- randomized completeness / soundness families ------------------------------------

def _random_verifiers(rng: random.Random, media, count: int) -> tuple:
    return tuple(VerifierConfig(Point(rng.uniform(-500, 500), rng.uniform(-500, 500)), rng.uniform(5, 500), media)
                 for _ in range(count))


def _inside(rng: random.Random, v: VerifierConfig, delta_p: Fraction) -> Point:
    # Uniform over the disk of radius R - delta_p * cs/(c+s), kept a hair inside.
    reach = float(as_time(v.acceptance_radius) - delta_p * roa_slack_speed(v.media)) * (1 - 1e-9)
    r = reach * math.sqrt(rng.random())
    a = rng.uniform(0, 2 * math.pi)
    return Point(v.position.x + r * math.cos(a), v.position.y + r * math.sin(a))


def honest_scenario(rng: random.Random, seed: int) -> ScenarioConfig:
    media = MediaParams()
    n = rng.randint(32, 512)
    verifiers = _random_verifiers(rng, media, rng.randint(1, 3))
    delta_p = min_processing_delay(n, media)
    v = rng.choice(verifiers)
    at = _inside(rng, v, delta_p)
    return ScenarioConfig(verifiers=verifiers, provers=(ProverSpec("p", at, processing_delay="min"),),
                          nonce_bits=n, seed=seed, horizon=30.0)


def cheat_scenario(rng: random.Random, seed: int) -> ScenarioConfig:
    """A prover farther than R from every verifier, lying about where it is."""
    media = MediaParams()
    n = rng.randint(32, 512)
    verifiers = _random_verifiers(rng, media, rng.randint(1, 3))
    v = rng.choice(verifiers)
    floor_ = min_processing_delay(n, media)
    room = as_time(v.acceptance_radius) / (floor_ * roa_slack_speed(media))
    factor = Fraction(rng.uniform(1.0, min(3.0, float(room) * 0.999)))
    delta_p = floor_ * max(Fraction(1), factor)
    claimed = _inside(rng, v, delta_p)
    while True:
        if rng.random() < 0.5:
            # Just past the boundary of the chosen verifier.
            r = v.acceptance_radius * (1 + rng.uniform(1e-9, 0.05))
            a = rng.uniform(0, 2 * math.pi)
            actual = Point(v.position.x + r * math.cos(a), v.position.y + r * math.sin(a))
        else:
            actual = Point(rng.uniform(-1500, 1500), rng.uniform(-1500, 1500))
        if all(distance(u.position, actual) > u.acceptance_radius for u in verifiers):
            break
    honesty = rng.choice(HONESTY_MODES)
    return ScenarioConfig(verifiers=verifiers,
                          provers=(ProverSpec("p", actual, claimed, delta_p, honesty),),
                          nonce_bits=n, seed=seed, horizon=60.0)
