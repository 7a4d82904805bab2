"""Timed-injection hit rate against the victim's start-time jitter window."""

from __future__ import annotations

import argparse
import math

from echosim.harness import run_scenario
from echosim.harness.grid import injection_expectation, injection_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--windows", type=float, nargs="+", default=[0.0, 0.002, 0.01, 0.1, 1.0])
    ap.add_argument("--blind", action="store_true", help="adversary guesses uniformly instead of a point time")
    args = ap.parse_args()

    print(f"{'window_s':>9} {'hits':>6} {'rate':>8} {'expected':>9} {'3sigma':>8} {'forged_processed':>17}")
    for w in args.windows:
        predicted = None if args.blind else w / 2
        hits = processed = 0
        for seed in range(args.trials):
            m = run_scenario(injection_scenario(seed, jitter_window=w, predicted_time=predicted)).metrics
            hits += m["injection_hits"] > 0
            processed += m["forged_accepts"] > 0
        p = injection_expectation(injection_scenario(0, jitter_window=w)) if w > 0 else 1.0
        band = 3 * math.sqrt(p * (1 - p) / args.trials)
        print(f"{w:>9g} {hits:>6} {hits / args.trials:>8.4f} {p:>9.4f} {band:>8.4f} {processed:>17}")


if __name__ == "__main__":
    main()
