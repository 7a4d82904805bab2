"""Splice success against message duration for a few adversary reaction times.

Symmetric geometry: verifier, prover and adversary pairwise 100 m apart.
"""

from __future__ import annotations

import argparse

from echosim.harness import run_scenario
from echosim.harness.grid import overwrite_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--reaction", type=float, nargs="+", default=[0.0001, 0.001, 0.005])
    ap.add_argument("--hashed", action="store_true", help="use the hash-command flow")
    args = ap.parse_args()

    durations_ms = [0.064, 0.25, 0.5, 0.9, 1.1, 2.0, 5.0, 10.0, 20.0]
    print("duration_ms " + " ".join(f"react={r * 1e3:g}ms".rjust(14) for r in args.reaction))
    for ms in durations_ms:
        size = max(1, round(ms * 1e-3 * 1e6 / 8))
        row = []
        for reaction in args.reaction:
            wins = 0
            for seed in range(args.runs):
                m = run_scenario(overwrite_scenario(size, seed, args.hashed, reaction)).metrics
                wins += m["hash_rejections"] > 0 if args.hashed else m["forged_accepts"] > 0
            row.append(f"{wins}/{args.runs}".rjust(14))
        print(f"{ms:>11g} " + " ".join(row))


if __name__ == "__main__":
    main()
