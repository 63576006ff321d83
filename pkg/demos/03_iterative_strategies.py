"""Iterative acquisition with a capped imbalance-ratio change.

Spending the whole budget on the curves fitted once ("one shot") trusts
hints that may be wrong, and acquiring a lot for one slice shifts the
data balance, which itself changes other slices' losses. The iterative
loop therefore re-fits the curves every round and never lets one round
move the imbalance ratio (max slice size / min slice size) by more than
the current limit T. The strategies differ in how T grows per round:
conservative keeps it fixed, moderate adds 1, aggressive doubles it.
"""

from slicetuner import (
    CurveEstimationConfig,
    IterativeConfig,
    SlicePartition,
    SliceState,
    SyntheticWorld,
    run_iterative,
)

ids = ["s0", "s1"]


def fresh_world():
    # slice s1's curve is calibrated 6.25x higher, so the full-budget plan
    # at sizes [10, 10] is [10, 40]
    return SyntheticWorld(ids, a=[1.0, 1.0], b=[1.0, 6.25], sizes=[5, 10], seed=3)


partition = SlicePartition((SliceState("s0", 5), SliceState("s1", 10)))
curve_cfg = CurveEstimationConfig(num_subsets=5, num_repeats=1, min_fraction=0.2, seed=11)

print("worked example: sizes [5, 10], minimum size 10, budget 55")
log = run_iterative(
    partition, fresh_world(), curve_cfg,
    IterativeConfig(min_slice_size=10, strategy="conservative", lam=0.0),
    budget=55.0,
)
print(f"  top-up to the minimum size: {log.top_up} (budget left 50)")
for rec in log.iterations:
    print(f"  round {rec.iteration}: plan {rec.plan}, limit T={rec.limit:g}, "
          f"scaled by x={rec.change_ratio:g} -> acquired {rec.acquired}, "
          f"ratio {rec.ir_before:g} -> {rec.ir_after:g}, budget left {rec.budget_remaining:g}")
print(f"  final sizes: {log.final_sizes}")
print()

print("strategy comparison on a larger scenario (budget 600):")
partition2 = SlicePartition((SliceState("s0", 50), SliceState("s1", 50)))
for strategy in ("conservative", "moderate", "aggressive"):
    world = SyntheticWorld(ids, a=[0.5, 1.2], b=[8.0, 1.0], sizes=[50, 50],
                           noise_sigma=0.01, seed=9)
    log = run_iterative(
        partition2, world, CurveEstimationConfig(seed=4),
        IterativeConfig(min_slice_size=10, strategy=strategy, lam=0.0),
        budget=600.0,
    )
    limits = ", ".join(f"{rec.limit:g}" for rec in log.iterations)
    print(f"  {strategy:>12}: {len(log.iterations)} rounds, limits [{limits}], "
          f"acquired {log.total_acquired}")
