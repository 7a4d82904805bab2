"""Command line: ``echosim run|sweep|matrix``.

Exit codes: 0 ran to the horizon, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .grid import EXPECTED, format_matrix, run_matrix
from .runner import run_scenario, verdict_vector
from .scenario import ConfigError, load_scenario
from .trace import emit_trace, render

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

SUMMARY_KEYS = ("accepts", "rejects", "aborts", "grants", "denies", "processed", "dropped",
                "hash_rejections", "adversary_requests", "adversary_grants", "forged_accepts", "spliced",
                "overwrite_attempts", "overwrite_misses", "injection_hits")


def _load(path: str, seed: int | None):
    cfg = load_scenario(path)
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", "--seed")
        cfg = replace(cfg, seed=seed)
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args.scenario, args.seed)
    result = run_scenario(cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            emit_trace(result.trace, fh, header=cfg)
    else:
        emit_trace(result.trace, sys.stdout, header=cfg)
    if not args.quiet:
        print(render({k: result.metrics[k] for k in SUMMARY_KEYS}), file=sys.stderr)
    return EXIT_OK


def _sweep_one(job: tuple) -> tuple:
    cfg, out_dir = job
    result = run_scenario(cfg)
    if out_dir:
        with open(os.path.join(out_dir, f"trace-{cfg.seed}.jsonl"), "w", encoding="utf-8") as fh:
            emit_trace(result.trace, fh, header=cfg)
    return cfg.seed, verdict_vector(result), {k: result.metrics[k] for k in SUMMARY_KEYS}


def cmd_sweep(args: argparse.Namespace) -> int:
    base = _load(args.scenario, None)
    if args.seeds < 1:
        raise ConfigError("must be at least 1", "--seeds")
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    jobs = [(replace(base, seed=args.seed_base + k), args.out_dir) for k in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    total = dict.fromkeys(SUMMARY_KEYS, 0)
    for seed, vector, metrics in sorted(rows):
        print(render({"seed": seed, "verdicts": vector}))
        for k in SUMMARY_KEYS:
            total[k] += metrics[k]
    print(render({"runs": len(rows), "totals": total}))
    return EXIT_OK


def cmd_matrix(args: argparse.Namespace) -> int:
    results = run_matrix(args.runs, args.seed_base)
    if args.json:
        for r in results:
            print(json.dumps({"cell": r.cell, "strategy": r.strategy, "runs": r.runs, "successes": r.successes,
                              "expected": EXPECTED[(r.cell, r.strategy)],
                              "matches": r.matches(EXPECTED[(r.cell, r.strategy)])}))
    else:
        print(format_matrix(results))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="echosim", description="Echo location-verification simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write its trace")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--out", default=None, help="trace file (default: stdout)")
    run.add_argument("--quiet", action="store_true", help="suppress the metrics summary on stderr")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a scenario over consecutive seeds")
    sweep.add_argument("scenario")
    sweep.add_argument("--seeds", type=int, required=True)
    sweep.add_argument("--seed-base", type=int, default=0)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--out-dir", default=None, help="write one trace file per seed here")
    sweep.set_defaults(func=cmd_sweep)

    matrix = sub.add_parser("matrix", help="attack success over the cell x strategy grid")
    matrix.add_argument("--runs", type=int, default=20)
    matrix.add_argument("--seed-base", type=int, default=0)
    matrix.add_argument("--json", action="store_true")
    matrix.set_defaults(func=cmd_matrix)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
