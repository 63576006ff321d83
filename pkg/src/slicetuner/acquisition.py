"""Acquisition loops: the imbalance-limited iterative method and baselines.

The iterative method interleaves curve re-estimation with allocation.
Each round it solves the one-shot allocation for the entire remaining
budget, but caps how far the acquisition may move the imbalance ratio
(max slice size / min slice size) from its current value: if the full
plan would move it by more than the limit T, the plan is scaled down by
the largest change ratio x that keeps the move within T. T itself grows
per iteration according to the strategy:

    conservative  T stays constant
    moderate      T += c        (default c = 1)
    aggressive    T *= c        (default c = 2, requires c > 1)

so a conservative run takes many small, frequently re-estimated steps
while an aggressive run converges in few rounds.

Two curve-free baselines are included: uniform (equal counts per slice)
and water filling (top smaller slices up to a common level).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .curves import CurveEstimationConfig, PowerLawCurve, estimate_curves
from .errors import OracleError
from .model import Budget, SlicePartition
from .optimizer import AllocationPlan, AllocationProblem, one_shot_allocate

log = logging.getLogger(__name__)

CONSERVATIVE = "conservative"
MODERATE = "moderate"
AGGRESSIVE = "aggressive"


@dataclass(frozen=True)
class IterativeConfig:
    """Knobs for the iterative acquisition loop."""

    min_slice_size: int = 1
    initial_limit: float = 1.0
    strategy: str = MODERATE
    strategy_constant: float | None = None  # defaults: moderate 1, aggressive 2
    lam: float = 0.0
    max_iterations: int = 50

    def __post_init__(self):
        if self.min_slice_size < 1:
            raise ValueError("min_slice_size must be >= 1")
        if self.initial_limit <= 0:
            raise ValueError("initial_limit must be > 0")
        if self.strategy not in (CONSERVATIVE, MODERATE, AGGRESSIVE):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy_constant is None:
            default = {CONSERVATIVE: 0.0, MODERATE: 1.0, AGGRESSIVE: 2.0}[self.strategy]
            object.__setattr__(self, "strategy_constant", default)
        if self.strategy == AGGRESSIVE and not self.strategy_constant > 1:
            raise ValueError("aggressive strategy needs a factor > 1")
        if self.strategy == MODERATE and not self.strategy_constant > 0:
            raise ValueError("moderate strategy needs a positive increment")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def get_imbalance_ratio(sizes) -> float:
    """max(sizes) / min(sizes); undefined (error) when any size is zero."""
    sizes = np.asarray(sizes, dtype=float)
    if sizes.size == 0 or np.any(sizes <= 0):
        raise ValueError("imbalance ratio needs all sizes >= 1")
    return float(sizes.max() / sizes.min())


def increase_limit(limit: float, strategy: str, constant: float | None = None) -> float:
    """Next imbalance-ratio change limit under the given strategy."""
    if limit <= 0:
        raise ValueError("limit must be > 0")
    if strategy == CONSERVATIVE:
        return limit
    if strategy == MODERATE:
        return limit + (1.0 if constant is None else constant)
    if strategy == AGGRESSIVE:
        c = 2.0 if constant is None else constant
        if not c > 1:
            raise ValueError("aggressive strategy needs a factor > 1")
        return limit * c
    raise ValueError(f"unknown strategy {strategy!r}")


class ChangeRatio(NamedTuple):
    x: float
    feasible: bool


def _ir_at(sizes, deltas, x: float) -> float:
    scaled = sizes + x * deltas
    return float(scaled.max() / scaled.min())


def get_change_ratio(sizes, num_examples, target_ratio: float) -> ChangeRatio:
    """Largest x in (0, 1] keeping the imbalance-ratio move within bounds.

    Scaling the plan by x moves the imbalance ratio from IR(sizes) toward
    IR(sizes + num_examples); the allowed band is |IR(x) - IR(sizes)| <=
    |target_ratio - IR(sizes)|. When IR(x) is monotone on [0, 1]
    (checked by sampling) the boundary is located by bisection to within
    1e-6 on the ratio; otherwise a 4096-point scan brackets the largest
    feasible x and a local bisection sharpens it. Returns x = 0 with
    ``feasible=False`` when no positive scaling stays in the band.
    """
    sizes = np.asarray(sizes, dtype=float)
    deltas = np.asarray(num_examples, dtype=float)
    if sizes.shape != deltas.shape or np.any(sizes <= 0) or np.any(deltas < 0):
        raise ValueError("sizes must be positive and num_examples nonnegative, equal length")
    ir0 = _ir_at(sizes, deltas, 0.0)
    band = abs(float(target_ratio) - ir0)

    def within(x):
        return abs(_ir_at(sizes, deltas, x) - ir0) <= band + 1e-12

    if within(1.0):
        return ChangeRatio(1.0, True)

    grid = np.linspace(0.0, 1.0, 64)
    ir_grid = np.array([_ir_at(sizes, deltas, x) for x in grid])
    diffs = np.diff(ir_grid)
    monotone = bool(np.all(diffs >= -1e-12) or np.all(diffs <= 1e-12))

    if monotone:
        # IR crosses the band boundary exactly once; bisect the crossing
        lo, hi = 0.0, 1.0
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if within(mid):
                lo = mid
            else:
                hi = mid
        return ChangeRatio(lo, True) if lo > 0 else ChangeRatio(0.0, False)

    scan = np.linspace(0.0, 1.0, 4096)
    feasible_mask = np.array([within(x) for x in scan])
    idx = np.nonzero(feasible_mask)[0]
    if idx.size == 0 or (idx.size == 1 and idx[0] == 0):
        return ChangeRatio(0.0, False)
    last = int(idx[-1])
    lo = float(scan[last])
    if last + 1 < len(scan):
        # sharpen within the bracketing interval
        hi = float(scan[last + 1])
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if within(mid):
                lo = mid
            else:
                hi = mid
    return ChangeRatio(lo, True)


@dataclass(frozen=True)
class IterationRecord:
    """Everything observed and decided in one loop iteration."""

    iteration: int
    sizes_before: tuple[int, ...]
    curves: tuple[PowerLawCurve, ...]
    curves_reliable: tuple[bool, ...]
    plan: tuple[int, ...]
    change_ratio: float
    acquired: tuple[int, ...]
    limit: float
    ir_before: float
    ir_after: float
    spent: float
    budget_remaining: float
    realized_per_slice_loss: tuple[float, ...]


@dataclass
class AcquisitionLog:
    """Full record of an iterative run."""

    slice_ids: tuple[str, ...]
    initial_sizes: tuple[int, ...]
    budget: Budget
    top_up: tuple[int, ...]
    iterations: list[IterationRecord] = field(default_factory=list)
    total_acquired: tuple[int, ...] = ()
    min_size_budget_short: bool = False
    pool_clamped: bool = False
    stalled: bool = False

    @property
    def final_sizes(self) -> tuple[int, ...]:
        return tuple(int(s + d) for s, d in zip(self.initial_sizes, self.total_acquired))

    def to_csv(self, path) -> None:
        """Long-format per-iteration, per-slice export."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "slice_id", "size_before", "acquired", "limit_T",
                 "ir_before", "ir_after", "budget_remaining", "realized_loss"]
            )
            for rec in self.iterations:
                for j, sid in enumerate(self.slice_ids):
                    writer.writerow(
                        [rec.iteration, sid, rec.sizes_before[j], rec.acquired[j],
                         repr(rec.limit), repr(rec.ir_before), repr(rec.ir_after),
                         repr(rec.budget_remaining), repr(rec.realized_per_slice_loss[j])]
                    )


def _limit_plan(sizes, plan_d, ir0, limit) -> tuple[np.ndarray, float]:
    """Scale an integer plan so the imbalance-ratio move stays within limit."""
    deltas = np.asarray(plan_d, dtype=float)
    after = _ir_at(sizes.astype(float), deltas, 1.0)
    if abs(after - ir0) <= limit + 1e-12:
        return np.asarray(plan_d, dtype=np.int64), 1.0
    target = ir0 + limit * math.copysign(1.0, after - ir0)
    ratio = get_change_ratio(sizes, deltas, target)
    if not ratio.feasible or ratio.x <= 0:
        return np.zeros(len(plan_d), dtype=np.int64), 0.0
    scaled = np.floor(ratio.x * deltas + 1e-9).astype(np.int64)
    # flooring can nudge the ratio past the band; trim examples until back inside
    for _ in range(int(scaled.sum()) + 1):
        ir_now = _ir_at(sizes.astype(float), scaled.astype(float), 1.0)
        if abs(ir_now - ir0) <= limit + 1e-9 or not np.any(scaled > 0):
            break
        grown = sizes + scaled
        if ir_now > ir0 + limit:
            candidates = np.nonzero(scaled > 0)[0]
            i = candidates[np.argmax(grown[candidates])]
        else:
            candidates = np.nonzero(scaled > 0)[0]
            i = candidates[np.argmin(grown[candidates])]
        scaled[i] -= 1
    return scaled, ratio.x


def run_iterative(
    partition: SlicePartition,
    oracle,
    curve_config: CurveEstimationConfig,
    config: IterativeConfig,
    budget: float,
    estimation_mode: str = "amortized",
) -> AcquisitionLog:
    """Run the imbalance-limited iterative acquisition loop.

    First tops every slice up to the minimum size L (proportionally to
    the deficits if the budget cannot cover them, in which case the run
    stops with ``min_size_budget_short`` set). Then, while at least one
    whole example is affordable and the iteration cap is not hit:
    re-estimate curves, allocate the entire remaining budget one-shot,
    cap the induced imbalance-ratio change at the current limit T,
    acquire through the oracle, and grow T per the strategy.

    An oracle failure mid-run aborts with the error re-raised; the log
    up to that point rides on the exception as ``partial_log``.
    """
    sizes = partition.sizes.copy()
    costs = partition.costs
    budget_state = Budget(float(budget))
    total_acquired = np.zeros(partition.n, dtype=np.int64)
    pool_clamped = False

    # ensure the minimum slice size L
    deficits = np.maximum(config.min_slice_size - sizes, 0).astype(np.int64)
    top_up = np.zeros(partition.n, dtype=np.int64)
    min_size_short = False
    if deficits.sum() > 0:
        need = float(costs @ deficits)
        if need > budget_state.remaining + 1e-9:
            scale = budget_state.remaining / need
            deficits = np.floor(scale * deficits + 1e-9).astype(np.int64)
            min_size_short = True
            log.warning("budget cannot cover minimum slice size; filling proportionally")
        ack = oracle.acquire([int(x) for x in deficits])
        top_up = np.asarray(ack.realized, dtype=np.int64)
        pool_clamped |= ack.clamped
        sizes = sizes + top_up
        total_acquired += top_up
        budget_state = budget_state.spend(float(costs @ top_up))

    out = AcquisitionLog(
        slice_ids=partition.ids,
        initial_sizes=tuple(int(s) for s in partition.sizes),
        budget=budget_state,
        top_up=tuple(int(x) for x in top_up),
        min_size_budget_short=min_size_short,
    )
    if min_size_short:
        out.total_acquired = tuple(int(x) for x in total_acquired)
        return out

    ir = get_imbalance_ratio(np.maximum(sizes, 1))
    limit = config.initial_limit
    try:
        while (
            budget_state.remaining >= float(costs.min()) - 1e-9
            and len(out.iterations) < config.max_iterations
        ):
            current = partition.with_sizes(sizes)
            est = estimate_curves(oracle, current, curve_config, mode=estimation_mode)
            problem = AllocationProblem(
                est.curves, sizes, costs, budget_state.remaining, lam=config.lam
            )
            plan: AllocationPlan = one_shot_allocate(problem)
            acquired, ratio = _limit_plan(sizes, np.array(plan.d), ir, limit)
            if not np.any(acquired > 0):
                out.stalled = True
                break
            ack = oracle.acquire([int(x) for x in acquired])
            realized = np.asarray(ack.realized, dtype=np.int64)
            pool_clamped |= ack.clamped
            sizes_before = sizes.copy()
            sizes = sizes + realized
            total_acquired += realized
            spent = float(costs @ realized)
            budget_state = budget_state.spend(spent)
            ir_after = get_imbalance_ratio(np.maximum(sizes, 1))
            losses = oracle.eval_fractions([1.0] * partition.n, seed=curve_config.seed)
            out.iterations.append(
                IterationRecord(
                    iteration=len(out.iterations) + 1,
                    sizes_before=tuple(int(s) for s in sizes_before),
                    curves=tuple(est.curves),
                    curves_reliable=tuple(est.reliable),
                    plan=plan.d,
                    change_ratio=ratio,
                    acquired=tuple(int(x) for x in realized),
                    limit=limit,
                    ir_before=ir,
                    ir_after=ir_after,
                    spent=spent,
                    budget_remaining=budget_state.remaining,
                    realized_per_slice_loss=tuple(float(l) for l in losses),
                )
            )
            limit = increase_limit(limit, config.strategy, config.strategy_constant)
            ir = ir_after
            if not np.any(realized > 0):
                out.stalled = True
                break
    except OracleError as exc:
        # abort, but hand the partial log to the caller on the error
        out.total_acquired = tuple(int(x) for x in total_acquired)
        out.budget = budget_state
        out.pool_clamped = pool_clamped
        exc.partial_log = out
        raise

    out.total_acquired = tuple(int(x) for x in total_acquired)
    out.budget = budget_state
    out.pool_clamped = pool_clamped
    return out


def uniform_allocate(partition: SlicePartition, budget: float) -> AllocationPlan:
    """Equal example counts per slice, residual spent in index order."""
    costs = partition.costs
    base = int(math.floor(budget / float(costs.sum()))) if budget > 0 else 0
    d = np.full(partition.n, base, dtype=np.int64)
    spent = float(costs @ d)
    while True:
        progressed = False
        for i in range(partition.n):
            if costs[i] <= budget - spent + 1e-12:
                d[i] += 1
                spent += float(costs[i])
                progressed = True
        if not progressed:
            break
    return AllocationPlan(d=tuple(int(x) for x in d), spent=spent, objective=float("nan"))


def water_filling_allocate(partition: SlicePartition, budget: float) -> AllocationPlan:
    """Top smaller slices up to a common level the budget can just afford."""
    sizes = partition.sizes.astype(float)
    costs = partition.costs

    def cost_at(level):
        return float(costs @ np.maximum(0.0, level - sizes))

    lo = float(sizes.min())
    hi = float(max(sizes.max(), lo + budget / float(costs.min()) + 1.0))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cost_at(mid) <= budget:
            lo = mid
        else:
            hi = mid
    level = lo
    d = np.floor(np.maximum(0.0, level - sizes) + 1e-9).astype(np.int64)
    spent = float(costs @ d)
    # spend the residual on the currently smallest affordable slices
    while True:
        current = sizes + d
        affordable = np.nonzero(costs <= budget - spent + 1e-12)[0]
        if affordable.size == 0:
            break
        i = affordable[np.argmin(current[affordable])]
        d[i] += 1
        spent += float(costs[i])
    return AllocationPlan(d=tuple(int(x) for x in d), spent=spent, objective=float("nan"))
