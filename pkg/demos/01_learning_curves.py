"""Estimate per-slice learning curves from a simulated loss oracle.

Each slice's validation loss follows a hidden power law b * x**(-a).
We query the oracle on subset fractions of every slice at once (so ten
fractions times five repeats is just fifty model trainings, no matter
how many slices there are), average the repeats, and fit one curve per
slice. The fitted parameters land on top of the hidden ones.
"""

from slicetuner import (
    CurveEstimationConfig,
    SlicePartition,
    SliceState,
    SyntheticWorld,
    estimate_curves,
)

ids = ["shirts", "shoes", "bags"]
true_a = [0.55, 0.80, 1.05]
true_b = [6.0, 3.5, 1.8]
sizes = [1200, 900, 1500]

world = SyntheticWorld(ids, a=true_a, b=true_b, sizes=sizes, noise_sigma=0.002, seed=42)
partition = SlicePartition(tuple(SliceState(i, s) for i, s in zip(ids, sizes)))

config = CurveEstimationConfig(num_subsets=10, num_repeats=5, min_fraction=0.1, seed=7)
estimates = estimate_curves(world, partition, config)

print(f"oracle queries used: {estimates.queries} "
      f"(= {config.num_subsets} fractions x {config.num_repeats} repeats)")
print()
print(f"{'slice':>8}  {'true a':>7} {'fit a':>7}  {'true b':>7} {'fit b':>7}  reliable")
for sid, a, b, curve, okflag in zip(ids, true_a, true_b, estimates.curves, estimates.reliable):
    print(f"{sid:>8}  {a:7.3f} {curve.a:7.3f}  {b:7.3f} {curve.b:7.3f}  {okflag}")

print()
print("predicted loss if a slice grew to 5000 examples:")
for sid, curve in zip(ids, estimates.curves):
    print(f"  {sid:>8}: {float(curve.predict(5000)):.4f}")

estimates.to_csv("curve_observations.csv")
print()
print("raw observations written to curve_observations.csv")
