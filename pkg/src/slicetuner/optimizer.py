"""Budget allocation as a convex program.

Given per-slice learning curves, current sizes, per-example costs and a
budget B, choose how many examples d_i to acquire per slice to minimize

    sum_i pred_i(d_i)  +  lambda * sum_i max(0, pred_i(d_i) / A - 1)

subject to sum_i C_i * d_i = B, d >= 0, where pred_i(d) is the curve's
predicted loss at size |s_i| + d and A is the mean predicted loss at the
current sizes (a constant for the problem instance). The first term
drives the overall loss down; the hinge term penalizes slices predicted
to stay above average, pushing toward equalized error rates; lambda
balances the two.

Each pred_i is convex in d_i and A is constant, so the objective is
convex. It is solved by projected gradient descent onto the
cost-weighted simplex {d >= 0, sum C_i d_i = B} and then rounded to
integer example counts by flooring plus greedy residual spending.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .curves import PowerLawCurve
from .errors import InvalidProblemError

log = logging.getLogger(__name__)

STEP_INIT = 1.0
BACKTRACK = 0.5
ARMIJO = 1e-4
OBJ_TOL = 1e-10
MAX_ITER = 10_000
MAX_BACKTRACKS = 80


@dataclass(frozen=True, eq=False)
class AllocationProblem:
    """One allocation instance: curves, sizes, costs, budget and lambda.

    ``baseline_loss`` (the unweighted mean predicted loss at the current
    sizes) is computed once at construction and stays fixed while the
    problem is being solved.
    """

    curves: tuple[PowerLawCurve, ...]
    sizes: np.ndarray
    costs: np.ndarray
    budget: float
    lam: float = 0.0
    baseline_loss: float = 0.0

    def __init__(self, curves, sizes, costs, budget, lam=0.0):
        curves = tuple(curves)
        sizes = np.asarray(sizes, dtype=float)
        costs = np.asarray(costs, dtype=float)
        n = len(curves)
        if n < 1 or len(sizes) != n or len(costs) != n:
            raise InvalidProblemError("curves, sizes and costs must share a positive length")
        params = np.array([[c.a, c.b, c.c] for c in curves])
        if not np.all(np.isfinite(params)):
            raise InvalidProblemError("curve parameters must be finite")
        if not (np.all(np.isfinite(sizes)) and np.all(sizes >= 1)):
            raise InvalidProblemError("sizes must be finite and >= 1")
        if not (np.all(np.isfinite(costs)) and np.all(costs > 0)):
            raise InvalidProblemError("costs must be finite and > 0")
        if not (np.isfinite(budget) and budget >= 0):
            raise InvalidProblemError(f"budget must be finite and >= 0, got {budget}")
        if lam < 0:
            raise InvalidProblemError(f"lambda must be >= 0, got {lam}")
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "budget", float(budget))
        object.__setattr__(self, "lam", float(lam))
        preds = np.array([c.predict(s) for c, s in zip(curves, sizes)])
        object.__setattr__(self, "baseline_loss", float(np.mean(preds)))

    @property
    def n(self) -> int:
        return len(self.curves)

    def _abc(self):
        a = np.array([c.a for c in self.curves])
        b = np.array([c.b for c in self.curves])
        c = np.array([c.c for c in self.curves])
        return a, b, c


@dataclass(frozen=True)
class AllocationPlan:
    """Integer examples to acquire per slice, with budget accounting."""

    d: tuple[int, ...]
    spent: float
    objective: float


def predicted_losses(problem: AllocationProblem, d) -> np.ndarray:
    """Per-slice predicted loss after acquiring d (real-valued) examples."""
    a, b, c = problem._abc()
    return b * np.power(problem.sizes + np.asarray(d, dtype=float), -a) + c


def objective(problem: AllocationProblem, d) -> float:
    """Objective value at a (possibly fractional) allocation d >= 0."""
    d = np.asarray(d, dtype=float)
    if d.shape != (problem.n,) or np.any(d < 0):
        raise ValueError(f"d must be a nonnegative vector of length {problem.n}")
    pred = predicted_losses(problem, d)
    penalty = np.maximum(0.0, pred / problem.baseline_loss - 1.0)
    return float(np.sum(pred) + problem.lam * np.sum(penalty))


def _gradient(problem: AllocationProblem, d) -> np.ndarray:
    a, b, c = problem._abc()
    x = problem.sizes + d
    dpred = -a * b * np.power(x, -a - 1.0)
    pred = b * np.power(x, -a) + c
    # subgradient of the hinge is 0 exactly at the kink
    active = pred / problem.baseline_loss - 1.0 > 0.0
    return dpred * (1.0 + problem.lam / problem.baseline_loss * active)


def project_budget_simplex(y, costs, budget) -> np.ndarray:
    """Euclidean projection of y onto {d >= 0, costs . d = budget}.

    KKT gives d_i = max(0, y_i - theta * c_i); the threshold theta is
    found exactly by sorting the breakpoints y_i / c_i.
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(costs, dtype=float)
    if budget <= 0:
        return np.zeros_like(y)
    t = y / c
    order = np.argsort(t)[::-1]
    ys, cs = y[order], c[order]
    ts = t[order]
    cum_cy = np.cumsum(cs * ys)
    cum_c2 = np.cumsum(cs * cs)
    thetas = (cum_cy - budget) / cum_c2
    # active set is the largest prefix whose last breakpoint sits above
    # its own threshold; for budget > 0 the first prefix always does
    valid = np.nonzero(ts > thetas)[0]
    k = valid[-1] if valid.size else 0
    return np.maximum(0.0, y - thetas[k] * c)


def solve_continuous(problem: AllocationProblem) -> np.ndarray:
    """Minimize the objective over the cost-weighted simplex.

    Projected gradient descent with Armijo backtracking: the step starts
    at 1.0, halves until sufficient decrease, and warm-starts each
    iteration at twice the last accepted step so it adapts to the
    problem's scale (budgets span orders of magnitude). The loop stops
    when the relative objective change drops below 1e-10 (or after
    10,000 iterations). Returns the real-valued optimum d* >= 0 with
    sum C_i d*_i = B.
    """
    if problem.budget == 0:
        return np.zeros(problem.n)
    c, B = problem.costs, problem.budget
    d = np.full(problem.n, B / float(np.sum(c)))  # equal-count feasible start
    f = objective(problem, d)
    # the first step must be able to traverse the whole feasible region
    # (diameter ~ B / min cost); gradients can be arbitrarily flat there
    g0 = float(np.max(np.abs(_gradient(problem, d))))
    step = max(STEP_INIT, (B / float(c.min())) / max(g0, 1e-300)) / 2.0
    for _ in range(MAX_ITER):
        g = _gradient(problem, d)
        step = 2.0 * step
        d_new, f_new = d, f
        for _ in range(MAX_BACKTRACKS):
            trial = project_budget_simplex(d - step * g, c, B)
            f_trial = objective(problem, trial)
            if f_trial <= f + ARMIJO * float(g @ (trial - d)):
                d_new, f_new = trial, f_trial
                break
            step *= BACKTRACK
        if f - f_new <= OBJ_TOL * max(1.0, abs(f)):
            d = d_new
            break
        d, f = d_new, f_new
    return d


def one_shot_allocate(problem: AllocationProblem) -> AllocationPlan:
    """Solve the continuous program once and spend the whole budget.

    The continuous solution is floored to integers, then the residual
    budget is spent one example at a time on the slice with the greatest
    marginal objective decrease per unit cost (ties broken by slice
    index) until no slice is affordable.
    """
    d_cont = solve_continuous(problem)
    d = np.floor(d_cont + 1e-9).astype(np.int64)
    d = np.maximum(d, 0)
    costs = problem.costs
    spent = float(costs @ d)
    remaining = problem.budget - spent
    while True:
        affordable = np.nonzero(costs <= remaining + 1e-12)[0]
        if affordable.size == 0:
            break
        base = objective(problem, d.astype(float))
        best_i, best_gain = -1, -np.inf
        for i in affordable:
            trial = d.astype(float)
            trial[i] += 1.0
            gain = (base - objective(problem, trial)) / costs[i]
            if gain > best_gain + 1e-15:
                best_i, best_gain = int(i), gain
        d[best_i] += 1
        spent += float(costs[best_i])
        remaining = problem.budget - spent
    return AllocationPlan(d=tuple(int(x) for x in d), spent=spent,
                          objective=objective(problem, d.astype(float)))
