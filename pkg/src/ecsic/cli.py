"""Command-line entry points.

Subcommands: run (experiment spec file -> output files), ingest-movielens
(ratings log -> scenario/replay files), capacity (crossover -> channel
capacity), codec-check (scheme parameters -> code lengths and a Monte Carlo
error-rate check against the analytic bound).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ecsic import codec, harness, movielens


def _cmd_run(args) -> int:
    spec = harness.load_spec(
        args.spec,
        trace_matrix=harness.load_trace_matrix(args.trace) if args.trace else None,
    )
    if args.seed is not None:
        spec.seed = args.seed
    if args.replications is not None:
        spec.replications = args.replications
    results = harness.run_experiment(spec, workers=args.threads)
    written = harness.emit_outputs(results, spec, args.out)
    for label, entry in results.items():
        print(
            f"{label}: final mean regret {entry['final_mean']:.6g}, "
            f"{entry['n_nonconverged']} non-converged, {entry['n_error']} errored"
        )
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    scenario = movielens.ingest_movielens(args.path, args.k, args.bin_hours)
    matrix = scenario.reward_matrix(args.horizon) if args.horizon else scenario.matrix
    harness.save_trace_matrix(args.out, matrix)
    order = np.sort(scenario.means)[::-1]
    report = {
        "source": args.path,
        "k_groups": scenario.k_groups,
        "bin_hours": scenario.bin_hours,
        "n_bins": int(scenario.matrix.shape[0]),
        "rows_written": int(matrix.shape[0]),
        "group_sizes": scenario.group_sizes,
        "means_sorted": [round(float(x), 6) for x in order],
        "mu_min": round(scenario.mu_min, 6),
    }
    if args.players:
        report["delta_at_M"] = round(scenario.delta_at(args.players), 6)
    print(json.dumps(report, indent=2))
    return 0


def _cmd_capacity(args) -> int:
    print(f"{codec.z_capacity(args.q):.12f}")
    return 0


def _cmd_codec_check(args) -> int:
    a, n = codec.code_length(args.scheme, args.q_bits, args.horizon, args.mu_min)
    rate = codec.word_error_rate(
        args.scheme, args.q_bits, a, 1 - args.mu_min, args.trials,
        np.random.default_rng(args.seed or 0),
    )
    bound = codec.analytic_error_bound(args.scheme, args.q_bits, a, args.mu_min)
    print(f"scheme={args.scheme} Q={args.q_bits} A={a} N={n}")
    print(f"word error rate {rate:.6g} over {args.trials} trials; analytic bound {bound:.6g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ecsic", description="No-sensing multi-player bandit simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment spec file")
    p.add_argument("spec", help="experiment spec (JSON)")
    p.add_argument("--trace", help="replay-matrix file for data-driven scenarios")
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("ingest-movielens", help="ratings log -> replay matrix")
    p.add_argument("path")
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--bin-hours", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=0, help="tile matrix to this length")
    p.add_argument("--players", type=int, default=0, help="report gap at this M")
    p.add_argument("--out", default="movielens.trc")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("capacity", help="Z-channel capacity at crossover q")
    p.add_argument("q", type=float)
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("codec-check", help="code lengths + Monte Carlo error rate")
    p.add_argument("scheme", choices=sorted(codec.SCHEMES))
    p.add_argument("--q-bits", type=int, default=8)
    p.add_argument("--horizon", type=int, default=10**6)
    p.add_argument("--mu-min", type=float, default=0.3)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_codec_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
