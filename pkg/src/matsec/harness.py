"""Trial execution and statistical checks for the online procedures.

A trial is fully determined by (seed, trial index) through a counter-based
generator, so runs reproduce exactly regardless of worker count or platform.
"""

from __future__ import annotations

import dataclasses
import importlib.resources
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.random import Generator, Philox

from .bitset import bit, bits
from .curves import (
    RankDensityCurve,
    WeightProfile,
    ZERO_CURVE,
    curve_value_F,
    is_approximation,
)
from .matroids import (
    DirectSumMatroid,
    GraphicMatroid,
    MinorView,
    PartitionMatroid,
    RankOracle,
    UniformMatroid,
)
from .online import (
    ArrivalStream,
    ProtocolViolation,
    RevealedGuard,
    adversarial_sample_run,
    main_run,
    osp,
)
from .partition import union_rank
from .principal import densest_set, rank_density_curve

WEIGHT_MODELS = ("constant", "uniform", "exponential", "single-heavy", "pareto")


@dataclass(frozen=True)
class InstanceSpec:
    """Everything needed to reproduce a batch of trials."""

    matroid: str
    weights: object = "exponential"  # model name or explicit list
    trials: int = 1000
    seed: int = 0
    arrival: str = "random"  # or "adversarial-with-sample"
    alpha: int = 288
    beta: int = 9
    forced_branch: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.arrival not in ("random", "adversarial-with-sample"):
            raise ValueError(f"unknown arrival model {self.arrival!r}")
        if isinstance(self.weights, str):
            if self.weights not in WEIGHT_MODELS:
                raise ValueError(f"unknown weight model {self.weights!r}")
        else:
            ws = list(self.weights)
            if not ws or any(w < 0 for w in ws):
                raise ValueError("explicit weight lists must be non-empty, non-negative")


@dataclass(frozen=True)
class TrialReport:
    trial: int
    alg_weight: float
    opt_weight: float
    selected_size: int
    branch: str
    violation: bool = False

    def to_json_obj(self) -> dict:
        return dataclasses.asdict(self)


# --- instance construction ----------------------------------------------------


def build_matroid(descriptor: str) -> RankOracle:
    """Parse fixture descriptors like ``uniform:200,10`` or ``graphic:path``."""
    kind, _, arg = descriptor.partition(":")
    if kind == "uniform":
        n, k = (int(x) for x in arg.split(","))
        return UniformMatroid(n, k)
    if kind == "partition":
        class_ids: list[int] = []
        caps: list[int] = []
        for i, piece in enumerate(arg.split(",")):
            size, _, cap = piece.partition("/")
            class_ids.extend([i] * int(size))
            caps.append(int(cap))
        return PartitionMatroid(class_ids, caps)
    if kind == "parallel-basis":
        r, c = (int(x) for x in arg.split(","))
        return PartitionMatroid([i // c for i in range(r * c)], [1] * r)
    if kind == "graphic":
        return GraphicMatroid.from_file(arg)
    if kind == "random-graphic":
        nv, ne, seed = (int(x) for x in arg.split(","))
        rng = Generator(Philox(key=[seed, 0]))
        edges = []
        while len(edges) < ne:
            u, v = int(rng.integers(nv)), int(rng.integers(nv))
            if u != v:
                edges.append((u, v))
        return GraphicMatroid(nv, edges)
    if kind == "fig1":
        path = importlib.resources.files("matsec").joinpath("data/fig1.edges")
        return GraphicMatroid.from_file(str(path))
    raise ValueError(f"unknown matroid descriptor {descriptor!r}")


def sample_profile(weights, n: int, rng) -> list[float]:
    """The adversary's weight multiset, before random assignment."""
    if not isinstance(weights, str):
        ws = [float(w) for w in weights]
        if len(ws) != n:
            raise ValueError(f"need {n} weights, got {len(ws)}")
        return ws
    if weights == "constant":
        return [1.0] * n
    if weights == "uniform":
        return [float(x) for x in rng.random(n)]
    if weights == "exponential":
        return [float(x) for x in rng.exponential(1.0, n)]
    if weights == "single-heavy":
        return [float(n)] + [1.0] * (n - 1)
    if weights == "pareto":
        return [float(x) + 1.0 for x in rng.pareto(2.0, n)]
    raise ValueError(f"unknown weight model {weights!r}")


def assign_weights(profile, rng) -> dict[int, float]:
    perm = rng.permutation(len(profile))
    return {e: profile[perm[e]] for e in range(len(profile))}


def offline_opt(oracle: RankOracle, weights) -> float:
    """Weight of a maximum-weight independent set under the realized assignment."""
    if isinstance(weights, dict):
        weights = [weights[e] for e in range(oracle.ground_size)]
    chosen = oracle.greedy_max_weight(weights)
    return float(sum(weights[e] for e in bits(chosen)))


# --- trials -------------------------------------------------------------------


def run_trial(oracle: RankOracle, spec: InstanceSpec, trial: int) -> TrialReport:
    rng = Generator(Philox(key=[spec.seed, trial]))
    profile = sample_profile(spec.weights, oracle.ground_size, rng)
    weights = assign_weights(profile, rng)
    opt = offline_opt(oracle, weights)

    guard = RevealedGuard(oracle)
    violation = False
    try:
        if spec.arrival == "random":
            stream = ArrivalStream.uniform(weights, rng, guard)
            result = main_run(
                guard,
                stream,
                rng,
                alpha=spec.alpha,
                beta=spec.beta,
                forced_branch=spec.forced_branch,
            )
        else:
            def make_stream(p):
                return ArrivalStream.with_sample_phase(weights, rng, p, guard)

            result = adversarial_sample_run(
                guard,
                make_stream,
                rng,
                alpha=spec.alpha,
                beta=spec.beta,
                forced_branch=spec.forced_branch,
            )
        selected, branch = result.selected, result.branch
    except ProtocolViolation:
        selected, branch, violation = 0, "violation", True

    if oracle.rank(selected) != selected.bit_count():
        raise RuntimeError(f"dependent selection {sorted(bits(selected))} in trial {trial}")
    alg = float(sum(weights[e] for e in bits(selected)))
    if alg > opt + 1e-9:
        raise RuntimeError(f"selection beats the offline optimum in trial {trial}")
    return TrialReport(trial, alg, opt, selected.bit_count(), branch, violation)


def _trial_batch(args):
    oracle, spec, lo, hi = args
    return [run_trial(oracle, spec, t) for t in range(lo, hi)]


def run_trials(oracle: RankOracle, spec: InstanceSpec) -> list[TrialReport]:
    workers = int(os.environ.get("MATSEC_WORKERS", "1"))
    if workers <= 1 or spec.trials < 2 * workers:
        return [run_trial(oracle, spec, t) for t in range(spec.trials)]
    step = -(-spec.trials // workers)
    batches = [
        (oracle, spec, lo, min(lo + step, spec.trials))
        for lo in range(0, spec.trials, step)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunks = list(pool.map(_trial_batch, batches))
    return [r for chunk in chunks for r in chunk]


def _bootstrap_ratio(alg, opt, seed: int):
    rng = Generator(Philox(key=[seed, 1 << 33]))
    t = len(alg)
    idx = rng.integers(0, t, size=(1000, t))
    num = alg[idx].mean(axis=1)
    den = opt[idx].mean(axis=1)
    ratios = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(np.percentile(ratios, 2.5)), float(np.percentile(ratios, 97.5))


def summarize_ratio(reports: list[TrialReport], seed: int) -> dict:
    alg = np.array([r.alg_weight for r in reports])
    opt = np.array([r.opt_weight for r in reports])
    mean_alg, mean_opt = float(alg.mean()), float(opt.mean())
    ratio = mean_alg / mean_opt if mean_opt > 0 else 0.0
    lo, hi = _bootstrap_ratio(alg, opt, seed)
    return {
        "mean_alg": mean_alg,
        "mean_opt": mean_opt,
        "ratio": ratio,
        "ci_lo": lo,
        "ci_hi": hi,
        "n_trials": len(reports),
        "seed": seed,
        "violations": sum(r.violation for r in reports),
    }


def estimate_ratio(spec: InstanceSpec, oracle: RankOracle | None = None) -> dict:
    if oracle is None:
        oracle = build_matroid(spec.matroid)
    return summarize_ratio(run_trials(oracle, spec), spec.seed)


# --- statistical checks of the probabilistic guarantees -------------------------


def _restriction_curve(oracle: RankOracle, mask: int) -> RankDensityCurve:
    if mask == 0:
        return ZERO_CURVE
    return rank_density_curve(MinorView(oracle, 0, mask))


def check_good_event(oracle: RankOracle, trials: int, seed: int) -> float:
    """Frequency with which a random half and its complement both give
    (288, 9)-approximations of the full rank-density curve."""
    full_curve = rank_density_curve(oracle)
    n = oracle.ground_size
    hits = 0
    for t in range(trials):
        rng = Generator(Philox(key=[seed, t]))
        flags = rng.random(n) < 0.5
        s = sum(bit(e) for e in range(n) if flags[e])
        left = _restriction_curve(oracle, s)
        right = _restriction_curve(oracle, oracle.full() & ~s)
        if is_approximation(left, full_curve, 288, 9) and is_approximation(
            right, full_curve, 288, 9
        ):
            hits += 1
    return hits / trials


def check_concentration(oracle: RankOracle, h: int, trials: int, seed: int):
    """Tail frequencies for the densest set of a random half, on fixtures
    packing 3h disjoint bases."""
    n = oracle.ground_size
    rank_n = oracle.rank(oracle.full())
    if union_rank(oracle, oracle.full(), 3 * h) != 3 * h * rank_n:
        raise ValueError("fixture must contain 3h disjoint bases")
    card_hits = 0
    rank_hits = 0
    for t in range(trials):
        rng = Generator(Philox(key=[seed, t]))
        flags = rng.random(n) < 0.5
        s = sum(bit(e) for e in range(n) if flags[e])
        d = densest_set(oracle, s, h)
        if (oracle.span(d) & ~s).bit_count() <= n / 12:
            card_hits += 1
        if oracle.rank(d) <= rank_n / 8:
            rank_hits += 1
    card_freq, rank_freq = card_hits / trials, rank_hits / trials
    card_bound = math.exp(-n / 144)
    rank_bound = math.exp(-rank_n / 48)
    for freq, bound in ((card_freq, card_bound), (rank_freq, rank_bound)):
        se = math.sqrt(bound * (1 - bound) / trials)
        assert freq <= bound + 3 * se, f"tail frequency {freq} exceeds bound {bound}"
    return card_freq, rank_freq


def check_opt_vs_F(oracle: RankOracle, profile, trials: int, seed: int) -> float:
    """Monte Carlo E[w(OPT)] against the curve functional bound."""
    wp = WeightProfile(profile)
    f_value = float(curve_value_F(wp, rank_density_curve(oracle)))
    samples = np.empty(trials)
    for t in range(trials):
        rng = Generator(Philox(key=[seed, t]))
        samples[t] = offline_opt(oracle, assign_weights(list(profile), rng))
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bound = 3 * math.e / (math.e - 1) * f_value
    assert mean <= bound + 3 * se, f"E[OPT]={mean} exceeds {bound} (+3se)"
    return mean / f_value if f_value else 0.0


def check_good_sample(oracle: RankOracle, grid, beta: int, trials: int, seed: int) -> float:
    """Frequency of the event that every chain ground set packs enough
    disjoint independent sets, over random half samples."""
    full = oracle.full()
    offline_spans = []
    prev = 0
    for lam in grid:
        d = densest_set(oracle, full, int(lam) // beta)
        offline_spans.append((int(lam), oracle.span(d), prev))
        prev = oracle.span(d)
    n = oracle.ground_size
    hits = 0
    for t in range(trials):
        rng = Generator(Philox(key=[seed, t]))
        flags = rng.random(n) < 0.5
        s = sum(bit(e) for e in range(n) if flags[e])
        ok = True
        prev_d = 0
        for lam, span_full, span_prev_full in offline_spans:
            d = densest_set(oracle, s, lam // beta)
            ground = oracle.span(d) & ~(s | oracle.span(prev_d))
            target = Fraction(lam) * oracle.rank(span_full & ~span_prev_full) / 24
            minor = MinorView(oracle, prev_d, ground)
            if union_rank(minor, minor.full(), lam) < target:
                ok = False
                break
            prev_d = d
        hits += ok
    return hits / trials


def osp_mean_weight(oracle: RankOracle, h: int, profile, trials: int, seed: int):
    """Monte Carlo mean selected weight of the round-based procedure, plus the
    minimum completed-round count seen."""
    means = np.empty(trials)
    min_rounds = None
    for t in range(trials):
        rng = Generator(Philox(key=[seed, t]))
        weights = assign_weights(list(profile), rng)
        guard = RevealedGuard(oracle)
        stream = ArrivalStream.uniform(weights, rng, guard)
        res = osp(guard, h, stream)
        means[t] = sum(weights[e] for e in bits(res.selected))
        min_rounds = (
            res.completed_rounds
            if min_rounds is None
            else min(min_rounds, res.completed_rounds)
        )
    se = float(means.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(means.mean()), se, min_rounds


# --- fixtures and random instances ----------------------------------------------


def default_fixtures() -> list[tuple[str, str]]:
    return [
        ("uniform-200-10", "uniform:200,10"),
        ("uniform-100-25", "uniform:100,25"),
        ("partition-mixed", "partition:3/1,6/2,9/3,12/1"),
        ("random-graphic-50-150", "random-graphic:50,150,20240817"),
        ("fig1", "fig1"),
    ]


def _primitive_matroid(rng, n: int) -> RankOracle:
    """Uniform, partition, or graphic matroid with exactly n elements."""
    kind = int(rng.integers(3))
    if kind == 0 or n == 1:
        return UniformMatroid(n, int(rng.integers(1, n + 1)))
    if kind == 1:
        ids = [int(rng.integers(max(1, n // 2))) for _ in range(n)]
        caps = [int(rng.integers(1, 4)) for _ in range(max(ids) + 1)]
        return PartitionMatroid(ids, caps)
    nv = int(rng.integers(2, max(3, n // 2 + 2)))
    edges = []
    while len(edges) < n:
        u, v = int(rng.integers(nv)), int(rng.integers(nv))
        if u != v:
            edges.append((u, v))
    return GraphicMatroid(nv, edges)


def random_matroid(rng, max_n: int = 10) -> RankOracle:
    """A small matroid of random kind, for differential tests; the ground set
    never exceeds max_n elements."""
    kind = int(rng.integers(5))
    n = int(rng.integers(2, max_n + 1))
    if kind <= 2:
        return _primitive_matroid(rng, n)
    if kind == 3:
        na = int(rng.integers(1, n))
        return DirectSumMatroid(
            [_primitive_matroid(rng, na), _primitive_matroid(rng, n - na)]
        )
    base = random_matroid(rng, max_n)
    full = base.full()
    contract = 0
    for e in bits(full):
        if rng.random() < 0.15:
            contract |= bit(e)
    keep = 0
    for e in bits(full & ~contract):
        if rng.random() < 0.75:
            keep |= bit(e)
    if keep == 0:
        return base
    return MinorView(base, contract, keep)
