"""Command-line interface.

All output is deterministic for a fixed seed: JSON objects are emitted with
sorted keys and no timestamps, so identical invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from numpy.random import Generator, Philox

from .bitset import bits
from .curves import RankDensityCurve, downshift
from .harness import (
    InstanceSpec,
    build_matroid,
    check_concentration,
    check_good_event,
    check_good_sample,
    check_opt_vs_F,
    default_fixtures,
    random_matroid,
    run_trials,
    sample_profile,
    summarize_ratio,
)
from .principal import brute_force_densest, densest_set, rank_density_curve

SUMMARY_HEADER = "suite,metric,value,ci_lo,ci_hi,n_trials,seed"


def _print_curve(curve: RankDensityCurve) -> None:
    print(json.dumps({"steps": curve.to_json_obj()}, sort_keys=True))
    print("t,rho")
    prev = Fraction(0)
    for step in curve.steps:
        print(f"{float(prev)},{float(step.density)}")
        print(f"{float(step.rank_end)},{float(step.density)}")
        prev = step.rank_end


def _summary_row(suite, metric, value, ci_lo, ci_hi, n_trials, seed) -> str:
    fmt = lambda x: "" if x is None else repr(float(x))
    return f"{suite},{metric},{fmt(value)},{fmt(ci_lo)},{fmt(ci_hi)},{n_trials},{seed}"


def _cmd_curve(args) -> int:
    descriptor = f"graphic:{args.graphic}" if args.graphic else args.matroid
    if descriptor is None:
        print("curve: need --matroid or --graphic", file=sys.stderr)
        return 2
    _print_curve(rank_density_curve(build_matroid(descriptor)))
    return 0


def _cmd_downshift(args) -> int:
    text = sys.stdin.read() if args.input == "-" else open(args.input).read()
    curve = RankDensityCurve.from_json_obj(json.loads(text)["steps"])
    _print_curve(downshift(curve, args.alpha, args.beta))
    return 0


def _cmd_run(args) -> int:
    spec = InstanceSpec(
        matroid=args.matroid,
        weights=args.weights,
        trials=args.trials,
        seed=args.seed,
        arrival=args.arrival,
        alpha=args.alpha,
        beta=args.beta,
        forced_branch=args.branch,
    )
    oracle = build_matroid(spec.matroid)
    reports = run_trials(oracle, spec)
    for r in reports:
        print(json.dumps(r.to_json_obj(), sort_keys=True))
    s = summarize_ratio(reports, spec.seed)
    print(SUMMARY_HEADER)
    print(_summary_row("run", "ratio", s["ratio"], s["ci_lo"], s["ci_hi"], s["n_trials"], s["seed"]))
    print(_summary_row("run", "mean_alg", s["mean_alg"], None, None, s["n_trials"], s["seed"]))
    print(_summary_row("run", "mean_opt", s["mean_opt"], None, None, s["n_trials"], s["seed"]))
    if s["violations"]:
        print(f"{s['violations']} protocol violations", file=sys.stderr)
        return 1
    return 0


def _cmd_verify(args) -> int:
    rows = []
    try:
        if args.suite in ("good-event", "all"):
            for name, desc in (
                ("uniform-200-10", "uniform:200,10"),
                ("random-graphic-50-150", "random-graphic:50,150,20240817"),
                ("fig1", "fig1"),
            ):
                freq = check_good_event(build_matroid(desc), args.trials, args.seed)
                se = math.sqrt(max(freq * (1 - freq), 0.01 * 0.99) / args.trials)
                assert freq >= 1 / 100 - 3 * se, f"good event too rare on {name}: {freq}"
                rows.append(("good-event", name, freq, None, None))
        if args.suite in ("concentration", "all"):
            oracle = build_matroid("parallel-basis:96,3")
            card, rank = check_concentration(oracle, 1, args.trials, args.seed)
            rows.append(("concentration", "cardinality-tail", card, None, None))
            rows.append(("concentration", "rank-tail", rank, None, None))
        if args.suite in ("opt-vs-f", "all"):
            for name, desc in default_fixtures():
                oracle = build_matroid(desc)
                rng = Generator(Philox(key=[args.seed, 977]))
                profile = sample_profile("exponential", oracle.ground_size, rng)
                ratio = check_opt_vs_F(oracle, profile, args.trials, args.seed)
                rows.append(("opt-vs-f", name, ratio, None, None))
        if args.suite in ("good-sample", "all"):
            freq = check_good_sample(
                build_matroid("parallel-basis:32,3"), [3], 3, args.trials, args.seed
            )
            se = math.sqrt(max(freq * (1 - freq), 1 / 3 * 2 / 3) / args.trials)
            assert freq >= 1 / 3 - 3 * se, f"good sample too rare: {freq}"
            rows.append(("good-sample", "parallel-basis-32-3", freq, None, None))
    except AssertionError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    print(SUMMARY_HEADER)
    for suite, metric, value, lo, hi in rows:
        print(_summary_row(suite, metric, value, lo, hi, args.trials, args.seed))
    return 0


def _cmd_oracle_diff(args) -> int:
    rng = Generator(Philox(key=[args.seed, 0]))
    mismatches = 0
    for i in range(args.count):
        oracle = random_matroid(rng, args.max_n)
        n = oracle.ground_size
        subset = int(rng.integers(0, 1 << n))
        lam = (
            Fraction(int(rng.integers(0, 5)))
            if rng.random() < 0.5
            else Fraction(int(rng.integers(1, 13)), int(rng.integers(1, 5)))
        )
        fast = densest_set(oracle, subset, lam)
        slow = brute_force_densest(oracle, subset, lam)
        if fast != slow:
            mismatches += 1
            print(
                f"mismatch #{i}: {oracle!r} subset={sorted(bits(subset))} "
                f"lam={lam} fast={sorted(bits(fast))} brute={sorted(bits(slow))}"
            )
    print(f"{args.count} comparisons, {mismatches} mismatches")
    return 1 if mismatches else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matsec")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("curve", help="rank-density curve of a matroid")
    c.add_argument("--matroid", help="descriptor, e.g. uniform:200,10 or fig1")
    c.add_argument("--graphic", help="path to an edge-list file")
    c.set_defaults(func=_cmd_curve)

    d = sub.add_parser("downshift", help="apply an (alpha, beta)-downshift to a curve")
    d.add_argument("--input", default="-", help="curve JSON file, - for stdin")
    d.add_argument("--alpha", type=int, required=True)
    d.add_argument("--beta", type=int, required=True)
    d.set_defaults(func=_cmd_downshift)

    r = sub.add_parser("run", help="Monte Carlo competitive-ratio estimate")
    r.add_argument("--matroid", required=True)
    r.add_argument("--weights", default="exponential")
    r.add_argument("--arrival", default="random", choices=["random", "adversarial-with-sample"])
    r.add_argument("--trials", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--branch", default=None, help="force a branch (testing)")
    r.add_argument("--alpha", type=int, default=288)
    r.add_argument("--beta", type=int, default=9)
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify", help="statistical checks of the probabilistic bounds")
    v.add_argument(
        "--suite",
        default="all",
        choices=["good-event", "concentration", "opt-vs-f", "good-sample", "all"],
    )
    v.add_argument("--trials", type=int, default=300)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=_cmd_verify)

    o = sub.add_parser("oracle-diff", help="densest-set fast path vs brute force")
    o.add_argument("--count", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--max-n", type=int, default=10)
    o.set_defaults(func=_cmd_oracle_diff)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
