"""Print the attack-success grid (cells x strategies) and flag surprises."""

from __future__ import annotations

import argparse

from echosim.harness.grid import EXPECTED, format_matrix, run_matrix


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed-base", type=int, default=0)
    args = ap.parse_args()
    results = run_matrix(args.runs, args.seed_base)
    print(format_matrix(results))
    bad = [r for r in results if not r.matches(EXPECTED[(r.cell, r.strategy)])]
    print("\npattern matches expectation" if not bad else f"\n{len(bad)} cell(s) deviate (marked !)")


if __name__ == "__main__":
    main()
