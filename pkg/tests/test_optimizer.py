import itertools

import numpy as np
import pytest

from slicetuner.curves import PowerLawCurve
from slicetuner.errors import InvalidProblemError
from slicetuner.optimizer import (
    AllocationProblem,
    objective,
    one_shot_allocate,
    project_budget_simplex,
    solve_continuous,
)


def integer_grid_min(problem, budget):
    """Oracle: exhaustively enumerate integer allocations with sum d = B."""
    n = problem.n
    B = int(budget)
    best = np.inf
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


def random_problem(rng, n=None, budget=None):
    n = n or int(rng.integers(1, 4))
    curves = [
        PowerLawCurve(float(a), float(b))
        for a, b in zip(rng.uniform(0.1, 2.0, n), rng.uniform(0.1, 20.0, n))
    ]
    sizes = rng.integers(1, 51, n)
    lam = float(rng.choice([0.0, 0.1, 1.0, 10.0]))
    B = float(rng.integers(0, 101)) if budget is None else budget
    return AllocationProblem(curves, sizes, np.ones(n), B, lam=lam)


class TestObjective:
    def test_single_slice_direct_evaluation(self):
        prob = AllocationProblem([PowerLawCurve(1.0, 10.0)], [5], [1.0], 5.0, lam=0.0)
        assert objective(prob, [5.0]) == pytest.approx(1.0)

    def test_hinge_is_zero_at_the_boundary(self):
        # one slice: its prediction equals the baseline average exactly
        prob = AllocationProblem([PowerLawCurve(1.0, 10.0)], [5], [1.0], 0.0, lam=1.0)
        assert objective(prob, [0.0]) == pytest.approx(prob.baseline_loss)

    def test_two_slice_spreadsheet_value(self):
        # oracle: plain-float evaluation of the formula, term by term
        # pred1 = 4*150**-0.5, pred2 = 9/60, A = (4/10 + 9/50)/2 = 0.29
        prob = AllocationProblem(
            [PowerLawCurve(0.5, 4.0), PowerLawCurve(1.0, 9.0)],
            [100, 50], [1.0, 1.0], 60.0, lam=1.0,
        )
        assert prob.baseline_loss == pytest.approx(0.29)
        expected = 0.6028008129610574
        assert objective(prob, [50.0, 10.0]) == pytest.approx(expected, abs=1e-14)

    def test_lambda_zero_equals_pure_predicted_loss(self, rng):
        for _ in range(30):
            prob = random_problem(rng)
            d = rng.uniform(0, 50, prob.n)
            pure = sum(
                c.predict(s + x) for c, s, x in zip(prob.curves, prob.sizes, d)
            )
            lam0 = AllocationProblem(prob.curves, prob.sizes, prob.costs, prob.budget, lam=0.0)
            assert objective(lam0, d) == pytest.approx(pure, abs=1e-12)

    def test_convexity_probe(self, rng):
        for _ in range(300):
            prob = random_problem(rng)
            d1 = rng.uniform(0, 100, prob.n)
            d2 = rng.uniform(0, 100, prob.n)
            mid = objective(prob, (d1 + d2) / 2)
            assert mid <= (objective(prob, d1) + objective(prob, d2)) / 2 + 1e-9

    def test_shape_validation(self):
        prob = AllocationProblem([PowerLawCurve(1.0, 1.0)], [5], [1.0], 1.0)
        with pytest.raises(ValueError):
            objective(prob, [1.0, 2.0])
        with pytest.raises(ValueError):
            objective(prob, [-1.0])


class TestProjection:
    def test_projects_onto_budget_plane(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 8))
            y = rng.normal(0, 50, n)
            c = rng.uniform(0.5, 3.0, n)
            B = float(rng.uniform(0, 500))
            d = project_budget_simplex(y, c, B)
            assert np.all(d >= 0)
            assert float(c @ d) == pytest.approx(B, abs=1e-6 * max(B, 1.0))

    def test_feasible_point_fixed(self):
        d = project_budget_simplex(np.array([2.0, 3.0]), np.array([1.0, 1.0]), 5.0)
        assert d == pytest.approx([2.0, 3.0])


class TestSolveContinuous:
    def test_symmetric_problem_splits_evenly(self):
        curves = [PowerLawCurve(0.7, 3.0), PowerLawCurve(0.7, 3.0)]
        prob = AllocationProblem(curves, [20, 20], [2.0, 2.0], 100.0, lam=0.0)
        d = solve_continuous(prob)
        assert d[0] == pytest.approx(d[1], rel=1e-6)
        assert d[0] == pytest.approx(25.0, rel=1e-6)

    def test_zero_budget(self):
        prob = AllocationProblem([PowerLawCurve(1.0, 1.0)] * 2, [5, 5], [1, 1], 0.0)
        assert solve_continuous(prob) == pytest.approx([0.0, 0.0])

    def test_budget_spent_exactly(self, rng):
        for _ in range(20):
            prob = random_problem(rng, budget=float(rng.integers(1, 101)))
            d = solve_continuous(prob)
            assert np.all(d >= 0)
            assert float(prob.costs @ d) == pytest.approx(
                prob.budget, abs=1e-6 * max(prob.budget, 1.0)
            )

    def test_three_slice_grid_oracle(self):
        curves = [PowerLawCurve(0.5, 4.0), PowerLawCurve(0.9, 6.0), PowerLawCurve(1.3, 2.0)]
        prob = AllocationProblem(curves, [10, 20, 30], [1.0, 1.0, 1.0], 60.0, lam=1.0)
        d = solve_continuous(prob)
        assert objective(prob, d) <= integer_grid_min(prob, 60) + 1e-3

    def test_invalid_problem_rejected(self):
        good = PowerLawCurve(1.0, 1.0)
        with pytest.raises(InvalidProblemError):
            AllocationProblem([good], [5], [1.0], float("nan"))
        with pytest.raises(InvalidProblemError):
            AllocationProblem([good], [0], [1.0], 5.0)  # size 0 undefined
        with pytest.raises(InvalidProblemError):
            AllocationProblem([good], [5], [0.0], 5.0)
        with pytest.raises(InvalidProblemError):
            AllocationProblem([good], [5], [1.0], 5.0, lam=-1.0)


class TestOneShot:
    def test_symmetric_rounding(self):
        curves = [PowerLawCurve(0.7, 3.0), PowerLawCurve(0.7, 3.0)]
        prob = AllocationProblem(curves, [20, 20], [1.0, 1.0], 10.0, lam=0.0)
        plan = one_shot_allocate(prob)
        assert plan.d == (5, 5)
        assert plan.spent == pytest.approx(10.0)

    def test_worked_fixture_plan(self):
        # fixture calibrated so the continuous optimum is exactly [10, 40]:
        # equal marginal gains need b2/b1 = (50/20)**2 = 6.25
        curves = [PowerLawCurve(1.0, 1.0), PowerLawCurve(1.0, 6.25)]
        prob = AllocationProblem(curves, [10, 10], [1.0, 1.0], 50.0, lam=0.0)
        plan = one_shot_allocate(prob)
        assert plan.d == (10, 40)
        # the grid oracle confirms the fixture's optimality
        assert plan.objective <= integer_grid_min(prob, 50) + 1e-12

    def test_nothing_affordable(self):
        prob = AllocationProblem([PowerLawCurve(1.0, 1.0)], [5], [10.0], 4.0)
        plan = one_shot_allocate(prob)
        assert plan.d == (0,)
        assert plan.spent == 0.0

    def test_oracle_equivalence_random_sweep(self, rng):
        for _ in range(25):
            prob = random_problem(rng)
            plan = one_shot_allocate(prob)
            assert plan.spent <= prob.budget + 1e-9
            assert plan.objective <= integer_grid_min(prob, prob.budget) + 1e-3

    def test_residual_below_max_cost(self, rng):
        for _ in range(25):
            n = int(rng.integers(2, 5))
            curves = [
                PowerLawCurve(float(a), float(b))
                for a, b in zip(rng.uniform(0.2, 1.5, n), rng.uniform(0.5, 10.0, n))
            ]
            costs = rng.uniform(0.5, 3.0, n)
            B = float(rng.uniform(10, 500))
            prob = AllocationProblem(curves, rng.integers(5, 100, n), costs, B, lam=1.0)
            plan = one_shot_allocate(prob)
            assert plan.spent <= B + 1e-9
            assert B - plan.spent < costs.max() + 1e-9

    def test_ties_broken_by_index(self):
        # identical slices, odd budget: the extra example goes to slice 0
        curves = [PowerLawCurve(0.7, 3.0), PowerLawCurve(0.7, 3.0)]
        prob = AllocationProblem(curves, [20, 20], [1.0, 1.0], 5.0, lam=0.0)
        plan = one_shot_allocate(prob)
        assert plan.d == (3, 2)
