"""Release gate.

Each check prints a single verdict line so a full run reads as a scoreboard.
The thresholds are statistical where the guarantee is probabilistic (3
standard errors) and exact where the math is exact.
"""

import math
import time
from fractions import Fraction

from conftest import make_rng
from matsec.curves import (
    RankDensityCurve,
    WeightProfile,
    curve_value_F,
    downshift,
    eta,
    is_approximation,
)
from matsec.harness import (
    InstanceSpec,
    build_matroid,
    check_concentration,
    check_good_event,
    check_opt_vs_F,
    default_fixtures,
    estimate_ratio,
    osp_mean_weight,
    random_matroid,
    run_trials,
    sample_profile,
)
from matsec.matroids import UniformMatroid
from matsec.partition import union_rank
from matsec.principal import brute_force_densest, densest_set, rank_density_curve


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _random_lambda(rng) -> Fraction:
    if rng.random() < 0.5:
        return Fraction(int(rng.integers(0, 7)))
    return Fraction(int(rng.integers(1, 13)), int(rng.integers(1, 5)))


def test_01_densest_set_matches_exhaustive_search():
    t0 = time.perf_counter()
    rng = make_rng(20260825, 1)
    mismatches = 0
    for _ in range(1000):
        m = random_matroid(rng, max_n=12)
        subset = int(rng.integers(0, 1 << m.ground_size))
        lam = _random_lambda(rng)
        if densest_set(m, subset, lam) != brute_force_densest(m, subset, lam):
            mismatches += 1
    dt = time.perf_counter() - t0
    _verdict(
        "01 densest-set vs exhaustive",
        mismatches == 0 and dt < 60,
        f"1000 triples, {mismatches} mismatches, {dt:.1f}s",
    )


def test_02_union_rank_matches_covering_minimum_everywhere():
    rng = make_rng(20260825, 2)
    mismatches = 0
    subsets_checked = 0
    for _ in range(50):
        m = random_matroid(rng, max_n=10)
        n = m.ground_size
        table = [m.rank(u) for u in range(1 << n)]
        for u in range(1 << n):
            best = [u.bit_count()] * 4
            b = u
            while b:
                outside = (u & ~b).bit_count()
                r = table[b]
                for j in range(4):
                    v = outside + (j + 1) * r
                    if v < best[j]:
                        best[j] = v
                b = (b - 1) & u
            for j in range(4):
                if union_rank(m, u, j + 1) != best[j]:
                    mismatches += 1
            subsets_checked += 1
    _verdict(
        "02 h-fold union rank vs covering minimum",
        mismatches == 0,
        f"50 matroids, {subsets_checked} subsets, h<=4, {mismatches} mismatches",
    )


def test_03_pinned_graph_curve_is_exact():
    curve = rank_density_curve(build_matroid("fig1"))
    expected = RankDensityCurve(
        [
            (7, Fraction(4)),
            (9, Fraction(5, 2)),
            (13, Fraction(9, 4)),
            (15, Fraction(2)),
            (19, Fraction(3, 2)),
            (24, Fraction(6, 5)),
            (27, Fraction(1)),
        ]
    )
    _verdict(
        "03 pinned 27-rank graph curve",
        curve == expected,
        f"{len(curve.steps)} steps, exact rational match",
    )


def _random_curve_for_profile(rng, n: int) -> RankDensityCurve:
    steps = []
    end = Fraction(0)
    density = Fraction(int(rng.integers(2, n + 1)))
    if rng.random() < 0.5:
        density += Fraction(int(rng.integers(1, 4)), int(rng.integers(2, 5)))
        density = min(density, Fraction(n))
    while True:
        end += Fraction(int(rng.integers(1, 900)))
        steps.append((end, density))
        if density <= 1 or rng.random() < 0.35:
            break
        density = Fraction(int(rng.integers(1, int(density))))
    return RankDensityCurve(steps)


def test_04_downshift_value_inequality_exact():
    rng = make_rng(20260825, 4)
    n = 48
    profile = WeightProfile([int(rng.integers(0, 10)) for _ in range(n)])
    w_max = Fraction(profile.w_max)
    params = [(2, 2), (24, 3), (288, 9)]
    worst_slack = None
    for i in range(500):
        alpha, beta = params[i % 3]
        curve = _random_curve_for_profile(rng, n)
        shifted = downshift(curve, alpha, beta)
        lhs = curve_value_F(profile, curve)
        rhs = 2 * alpha * beta * curve_value_F(profile, shifted) + alpha * w_max
        assert lhs <= rhs, (curve, alpha, beta)
        slack = rhs - lhs
        worst_slack = slack if worst_slack is None else min(worst_slack, slack)
    _verdict(
        "04 curve value vs downshifted value",
        True,
        f"500 exact pairs over (2,2),(24,3),(288,9); min slack {float(worst_slack):.3f}",
    )


def test_05_approximation_composition():
    rng = make_rng(20260825, 5)
    alphas = [1, 2, 3, 4, 24]
    betas = [1, 2, 3, 9]
    violations = 0
    for _ in range(500):
        curve = _random_curve_for_profile(rng, 40)
        a1, a2 = (alphas[int(rng.integers(len(alphas)))] for _ in range(2))
        b1, b2 = (betas[int(rng.integers(len(betas)))] for _ in range(2))
        once = downshift(curve, a1, b1)
        twice = downshift(once, a2, b2)
        if not (
            is_approximation(once, curve, a1, b1)
            and is_approximation(twice, once, a2, b2)
            and is_approximation(twice, curve, a1 * a2, b1 * b2)
        ):
            violations += 1
    _verdict(
        "05 double downshift composes multiplicatively",
        violations == 0,
        f"500 triples, {violations} violations",
    )


def test_06_expected_maximum_properties():
    rng = make_rng(20260825, 6)
    n = 50
    profile = WeightProfile([float(x) for x in rng.exponential(1.0, n)])

    grid = [Fraction(i * n, 99) for i in range(100)]
    vals = [eta(profile, a) for a in grid]
    monotone = all(x <= y for x, y in zip(vals, vals[1:]))

    scaling_ok = 0
    for _ in range(500):
        a = 1.0 + float(rng.random()) * 6.0
        h = 1.0 + float(rng.random()) * (n / a - 1.0)
        scaling_ok += eta(profile, a * h) <= 2 * a * eta(profile, h)

    m_draws, p = 40, 0.3
    draws = rng.binomial(m_draws, p, 20000)
    sample = [float(eta(profile, int(x))) for x in draws]
    mean = sum(sample) / len(sample)
    var = sum((x - mean) ** 2 for x in sample) / (len(sample) - 1)
    se = math.sqrt(var / len(sample))
    bound = 3 * float(eta(profile, m_draws * p))
    binomial_ok = mean <= bound + 3 * se

    ok = monotone and scaling_ok == 500 and binomial_ok
    _verdict(
        "06 expected-maximum properties",
        ok,
        f"monotone on 100-point grid: {monotone}; scaling {scaling_ok}/500; "
        f"E[eta(Bin)] {mean:.3f} <= {bound:.3f} (+3se)",
    )


def test_07_random_half_curve_estimation_succeeds_often():
    t0 = time.perf_counter()
    rows = []
    ok = True
    for name, desc in (
        ("uniform-200-10", "uniform:200,10"),
        ("random-graphic-50-150", "random-graphic:50,150,20240817"),
        ("fig1", "fig1"),
    ):
        freq = check_good_event(build_matroid(desc), trials=2000, seed=20260825)
        se = math.sqrt(max(freq * (1 - freq), 0.01 * 0.99) / 2000)
        ok = ok and freq >= 1 / 100 - 3 * se
        rows.append(f"{name}={freq:.3f}")
    dt = time.perf_counter() - t0
    _verdict(
        "07 both random halves approximate the curve",
        ok and dt < 600,
        f"{'; '.join(rows)}; floor 0.01-3se; {dt:.0f}s",
    )


def test_08_densest_set_concentration_tails():
    m = build_matroid("parallel-basis:96,3")
    card_freq, rank_freq = check_concentration(m, h=1, trials=5000, seed=20260825)
    bound = math.exp(-2)
    se = math.sqrt(bound * (1 - bound) / 5000)
    ok = card_freq <= bound + 3 * se and rank_freq <= bound + 3 * se
    _verdict(
        "08 random-half densest-set tails",
        ok,
        f"cardinality {card_freq:.4f}, rank {rank_freq:.4f}, bound exp(-2)={bound:.4f} (+3se)",
    )


def test_09_offline_optimum_vs_curve_functional():
    rows = []
    for name, desc in default_fixtures():
        oracle = build_matroid(desc)
        for model in ("exponential", "single-heavy"):
            rng = make_rng(20260825, 9)
            profile = sample_profile(model, oracle.ground_size, rng)
            ratio = check_opt_vs_F(oracle, profile, trials=5000, seed=20260825)
            rows.append(f"{name}/{model}={ratio:.2f}")
    _verdict(
        "09 E[OPT] within 3e/(e-1) of the curve value",
        True,
        "; ".join(rows),
    )


def test_10_round_based_selection_floor():
    rng = make_rng(20260825, 10)
    rows = []
    ok = True
    for h, s, matroid in (
        (1, 4, UniformMatroid(4, 4)),
        (3, 2, UniformMatroid(6, 2)),
        (9, 2, UniformMatroid(18, 2)),
    ):
        profile = [float(x) for x in rng.exponential(1.0, matroid.ground_size)]
        mean, se, min_rounds = osp_mean_weight(matroid, h, profile, trials=3000, seed=20260825)
        floor = s / (2 * math.e) * float(eta(WeightProfile(profile), h))
        ok = ok and mean >= floor - 3 * se and min_rounds >= max(1, s // 2)
        rows.append(f"(h={h},s={s}): mean {mean:.3f} >= {floor:.3f}, rounds >= {min_rounds}")
    _verdict("10 round-based selection value floor", ok, "; ".join(rows))


def test_11_no_protocol_violations_at_scale():
    t0 = time.perf_counter()
    batches = [
        InstanceSpec("uniform:8,2", trials=20000, seed=101),
        InstanceSpec("uniform:8,2", trials=20000, seed=102, arrival="adversarial-with-sample"),
        InstanceSpec("partition:2/1,4/2,6/3", trials=15000, seed=103),
        InstanceSpec(
            "partition:2/1,4/2,6/3", trials=15000, seed=104, arrival="adversarial-with-sample"
        ),
        InstanceSpec("random-graphic:7,12,3", trials=10000, seed=105),
        InstanceSpec("uniform:10,3", trials=5000, seed=106, forced_branch="secretary"),
        InstanceSpec("uniform:10,3", trials=5000, seed=107, forced_branch="chain"),
        InstanceSpec(
            "uniform:10,3",
            trials=2500,
            seed=108,
            arrival="adversarial-with-sample",
            forced_branch="threshold-e",
        ),
        InstanceSpec(
            "uniform:10,3",
            trials=2500,
            seed=109,
            arrival="adversarial-with-sample",
            forced_branch="threshold-2e",
        ),
        InstanceSpec(
            "uniform:10,3",
            trials=2500,
            seed=110,
            arrival="adversarial-with-sample",
            forced_branch="osp1",
        ),
        InstanceSpec(
            "uniform:10,3",
            trials=2500,
            seed=111,
            arrival="adversarial-with-sample",
            forced_branch="chain",
        ),
        InstanceSpec(
            "parallel-basis:6,27", trials=500, seed=112, alpha=5, beta=3, forced_branch="chain"
        ),
    ]
    total = 0
    violations = 0
    for spec in batches:
        # run_trial raises on any dependent selection, so reaching the end
        # certifies independence of every returned set
        reports = run_trials(build_matroid(spec.matroid), spec)
        total += len(reports)
        violations += sum(r.violation for r in reports)
    dt = time.perf_counter() - t0
    _verdict(
        "11 protocol safety at scale",
        total >= 100_000 and violations == 0,
        f"{total} trials, {violations} violations, {dt:.0f}s",
    )


def test_12_end_to_end_ratio_floor():
    spec = InstanceSpec("uniform:100,25", weights="exponential", trials=10000, seed=20260825)
    summary = estimate_ratio(spec)
    ok = summary["ratio"] >= 0.01 and summary["violations"] == 0
    _verdict(
        "12 end-to-end competitive ratio floor",
        ok,
        f"ratio {summary['ratio']:.4f} (CI {summary['ci_lo']:.4f}..{summary['ci_hi']:.4f}), "
        f"baseline for regressions, floor 0.01, {summary['n_trials']} trials",
    )
