"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they pass. Tolerances are pinned in the assertions.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

from slicetuner.acquisition import (
    CONSERVATIVE,
    IterativeConfig,
    get_change_ratio,
    get_imbalance_ratio,
    run_iterative,
)
from slicetuner.curves import (
    CurveEstimationConfig,
    CurvePoint,
    estimate_curves,
    fit_power_law,
    weighted_residual,
)
from slicetuner.harness import compare_estimation_modes, run_experiment, build_oracle
from slicetuner.model import SlicePartition, SliceState, normalize_costs, unfairness
from slicetuner.optimizer import AllocationProblem, objective, one_shot_allocate
from slicetuner.oracle import SyntheticWorld
from slicetuner.seeding import derive

from conftest import hetero_config


def ok(name):
    print(f"[acceptance] {name}: PASS")


@pytest.fixture(scope="module")
def full_run():
    """Shared 7-method, 10-trial run on the heterogeneous scenario."""
    cfg = hetero_config(
        methods=("original", "uniform", "water_filling", "one_shot",
                 "conservative", "moderate", "aggressive"),
    )
    return cfg, run_experiment(cfg)


def test_worked_example_exactness():
    start = time.perf_counter()
    # fixture world whose one-shot plan at sizes [10, 10], B = 50 is [10, 40]
    world = SyntheticWorld(["s0", "s1"], a=[1.0, 1.0], b=[1.0, 6.25], sizes=[5, 10], seed=3)
    partition = SlicePartition((SliceState("s0", 5), SliceState("s1", 10)))
    log = run_iterative(
        partition, world,
        CurveEstimationConfig(num_subsets=5, num_repeats=1, min_fraction=0.2, seed=11),
        IterativeConfig(min_slice_size=10, strategy=CONSERVATIVE, lam=0.0),
        budget=55.0,
    )
    assert log.top_up == (5, 0)
    first = log.iterations[0]
    assert first.ir_before == 1.0
    assert first.plan == (10, 40)
    assert first.change_ratio == pytest.approx(0.5, abs=1e-9)
    assert first.acquired == (5, 20)
    # the standalone limiter agrees exactly
    assert get_change_ratio([10, 10], [10, 40], 2.0).x == pytest.approx(0.5, abs=1e-9)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    ok("worked-example exactness")


def test_unfairness_exactness():
    start = time.perf_counter()
    before, _ = unfairness([5, 3], 4)
    after, _ = unfairness([2, 3], 2.4)
    assert before == 1.0
    assert after == 0.5
    assert time.perf_counter() - start < 1.0
    ok("unfairness exactness")


def test_cost_normalization_bit_exact():
    times = [82.1, 81.9, 67.6, 79.3, 94.8, 77.5, 91.6, 104.6]
    costs = normalize_costs(times)
    assert costs == [1.2, 1.2, 1.0, 1.2, 1.4, 1.1, 1.4, 1.5]
    ok("cost normalization")


def test_curve_fit_identifiability():
    start = time.perf_counter()
    sizes = np.arange(10, 101, 10).astype(float)
    # noiseless points recover the parameters
    pts = [CurvePoint(int(s), float(5.0 * s**-0.8)) for s in sizes]
    curve = fit_power_law(pts)
    assert curve.a == pytest.approx(0.8, rel=1e-4)
    assert curve.b == pytest.approx(5.0, rel=1e-4)
    # noisy fit matches a dense grid-search oracle within 1%
    rng = np.random.default_rng(404)
    losses = np.maximum(3.0 * sizes**-0.5 + rng.normal(0, 0.05, len(sizes)), 0.0)
    weights = sizes / sizes.max()
    noisy = [CurvePoint(int(s), float(l), float(w))
             for s, l, w in zip(sizes, losses, weights)]
    fitted = fit_power_law(noisy)
    fit_rss = weighted_residual(sizes, losses, weights, fitted.a, fitted.b)
    best = np.inf
    for a in np.linspace(0.01, 3.0, 300):
        pred = np.outer(np.linspace(0.1, 20.0, 400), np.power(sizes, -a))
        best = min(best, float(np.min(np.sum(weights * (losses - pred) ** 2, axis=1))))
    assert fit_rss <= 1.01 * best
    assert time.perf_counter() - start < 10.0
    ok("curve-fit identifiability")


def test_optimizer_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    from slicetuner.curves import PowerLawCurve

    def grid_min(problem, B):
        n, best = problem.n, np.inf
        if n == 1:
            return objective(problem, [B])
        if n == 2:
            for d0 in range(B + 1):
                best = min(best, objective(problem, [d0, B - d0]))
            return best
        for d0 in range(B + 1):
            for d1 in range(B - d0 + 1):
                best = min(best, objective(problem, [d0, d1, B - d0 - d1]))
        return best

    for _ in range(50):
        n = int(rng.integers(1, 4))
        curves = [PowerLawCurve(float(a), float(b))
                  for a, b in zip(rng.uniform(0.1, 2.0, n), rng.uniform(0.1, 20.0, n))]
        B = int(rng.integers(0, 101))
        problem = AllocationProblem(
            curves, rng.integers(1, 51, n), np.ones(n), float(B),
            lam=float(rng.choice([0.0, 0.1, 1.0, 10.0])),
        )
        plan = one_shot_allocate(problem)
        assert plan.spent <= B + 1e-9
        assert plan.objective - grid_min(problem, B) <= 1e-3
    assert time.perf_counter() - start < 120.0
    ok("optimizer oracle equivalence")


def test_convexity_probe():
    rng = np.random.default_rng(7)
    from slicetuner.curves import PowerLawCurve

    violations = 0
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        curves = [PowerLawCurve(float(a), float(b))
                  for a, b in zip(rng.uniform(0.1, 2.0, n), rng.uniform(0.1, 20.0, n))]
        problem = AllocationProblem(
            curves, rng.integers(1, 100, n), np.ones(n), 100.0,
            lam=float(rng.choice([0.0, 0.1, 1.0, 10.0])),
        )
        d1 = rng.uniform(0, 100, n)
        d2 = rng.uniform(0, 100, n)
        mid = objective(problem, (d1 + d2) / 2)
        if mid > (objective(problem, d1) + objective(problem, d2)) / 2 + 1e-9:
            violations += 1
    assert violations == 0
    ok("convexity probe")


def test_budget_feasibility_across_trials(full_run):
    cfg, report = full_run
    max_cost = max(s.cost for s in cfg.slices)
    for o in report.outcomes:
        assert o.status == "ok"
        assert o.residual_ok
        assert o.spent <= cfg.budget + 1e-9
        if o.method in ("uniform", "water_filling", "one_shot"):
            assert cfg.budget - o.spent < max_cost + 1e-9
    ok("budget feasibility")


def test_baseline_domination_trend(full_run):
    start = time.perf_counter()
    cfg, report = full_run
    # budget equals 1.5x the initial total size
    assert cfg.budget == 1.5 * sum(s.size for s in cfg.slices)
    mod = report.summary["moderate"]
    uni = report.summary["uniform"]
    wf = report.summary["water_filling"]
    assert mod["loss_mean"] <= uni["loss_mean"]
    assert mod["loss_mean"] <= wf["loss_mean"]
    for baseline in (uni, wf):
        margin = (baseline["avg_eer_mean"] - mod["avg_eer_mean"]) / baseline["avg_eer_mean"]
        assert margin >= 0.05
    assert time.perf_counter() - start < 60.0
    ok("baseline-domination trend")


def test_lambda_tradeoff_trend():
    start = time.perf_counter()
    base = hetero_config(methods=("moderate",))
    stats = []
    for lam in (0.0, 0.1, 1.0, 10.0):
        report = run_experiment(dataclasses.replace(base, lam=lam))
        stats.append(report.summary["moderate"])
    for lo, hi in zip(stats, stats[1:]):
        pooled_eer = math.sqrt(lo["avg_eer_se"] ** 2 + hi["avg_eer_se"] ** 2)
        pooled_loss = math.sqrt(lo["loss_se"] ** 2 + hi["loss_se"] ** 2)
        assert hi["avg_eer_mean"] <= lo["avg_eer_mean"] + pooled_eer
        assert hi["loss_mean"] >= lo["loss_mean"] - pooled_loss
    assert time.perf_counter() - start < 120.0
    ok("lambda tradeoff trend")


def test_strategy_ordering(full_run):
    cfg, report = full_run
    for t in range(cfg.num_trials):
        iters = {o.method: o.iterations for o in report.outcomes if o.trial == t}
        assert iters["conservative"] >= iters["moderate"]
        assert iters["moderate"] >= iters["aggressive"] - 1
    ok("strategy ordering")


def test_estimation_mode_efficiency():
    n = 10
    rng = np.random.default_rng(9)
    kappa = np.round(rng.uniform(-0.003, 0.003, (n, n)), 5)
    np.fill_diagonal(kappa, 0.0)
    cfg = dataclasses.replace(
        hetero_config(methods=("moderate",), noise_sigma=0.01, seed=77),
        oracle=dataclasses.replace(
            hetero_config().oracle, kappa=tuple(map(tuple, kappa)), noise_sigma=0.01
        ),
    )
    comparison = compare_estimation_modes(cfg)
    assert comparison.queries_amortized == 50
    assert comparison.queries_exhaustive == 500
    for t in range(cfg.num_trials):
        pair = {r["mode"]: r["loss"] for r in comparison.rows if r["trial"] == t}
        rel = abs(pair["amortized"] - pair["exhaustive"]) / pair["exhaustive"]
        assert rel <= 0.10
    ok("estimation-mode efficiency")


def test_unreliable_curve_robustness():
    cfg = hetero_config(
        size=30, budget=500.0, noise_sigma=0.25, seed=31,
        methods=("uniform", "water_filling", "moderate"),
        num_repeats=1, min_slice_size=30,
    )
    # the regime: first-pass fits exceed the residual-to-signal threshold
    flagged = 0
    for t in range(cfg.num_trials):
        seed = derive(cfg.seed, t)
        est = estimate_curves(
            build_oracle(cfg, seed), cfg.partition(),
            cfg.curve_config(seed=derive(seed, 1)),
        )
        unreliable = sum(1 for r in est.reliable if not r)
        assert unreliable >= 1
        flagged += unreliable
    assert flagged >= 10
    report = run_experiment(cfg)
    mod = report.summary["moderate"]
    for baseline in ("uniform", "water_filling"):
        assert mod["loss_mean"] <= report.summary[baseline]["loss_mean"]
        assert mod["avg_eer_mean"] <= report.summary[baseline]["avg_eer_mean"]
    ok("unreliable-curve robustness")
