"""Per-slice learning-curve estimation.

A learning curve maps a slice's training-set size x to the validation
loss of a model trained at that size, modeled as the power law

    loss(x) = b * x**(-a)          (a, b > 0)

optionally with a lower-bound floor c when enough data exists to see
diminishing returns:

    loss(x) = b * x**(-a) + c      (c >= 0)

Curves are fitted by weighted nonlinear least squares (damped
Gauss-Newton) on measured (size, loss) points, weighting points
proportionally to their subset size since losses measured on small
subsets are noisier.

``estimate_curves`` produces the measurement points by querying a loss
oracle on subset fractions of all slices at once (the amortized scheme:
one model training serves every slice), so the number of oracle queries
is num_subsets * num_repeats regardless of the slice count. The
exhaustive scheme, kept for comparison, shrinks one slice at a time and
costs n times more queries.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFitError, InsufficientDataError
from .model import SlicePartition
from .seeding import derive

log = logging.getLogger(__name__)

# damped Gauss-Newton settings
DAMP_INIT = 1e-3
DAMP_UP = 10.0
DAMP_DOWN = 10.0
MAX_ITER = 200
PARAM_TOL = 1e-8

FALLBACK_EXPONENT = 1e-3  # near-flat exponent for slices whose fit failed
UNRELIABLE_RESIDUAL_RATIO = 0.5


@dataclass(frozen=True)
class PowerLawCurve:
    """Fitted power-law curve loss(x) = b * x**(-a) + c."""

    a: float
    b: float
    c: float = 0.0
    converged: bool = True

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c >= 0):
            raise ValueError(f"need a > 0, b > 0, c >= 0, got a={self.a}, b={self.b}, c={self.c}")

    def predict(self, x):
        """Predicted loss at training size x (scalar or array, x > 0)."""
        return self.b * np.power(np.asarray(x, dtype=float), -self.a) + self.c


@dataclass(frozen=True)
class CurvePoint:
    """One measured (subset size, loss) observation and its fitting weight."""

    size: int
    loss: float
    weight: float = 1.0

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"size must be positive, got {self.size}")
        if self.loss < 0:
            raise ValueError(f"loss must be >= 0, got {self.loss}")
        if self.weight <= 0:
            raise ValueError(f"weight must be > 0, got {self.weight}")


@dataclass(frozen=True)
class CurveEstimationConfig:
    """Controls subset sampling for curve estimation.

    num_subsets is the number of distinct subset fractions per curve,
    num_repeats how many independent curves are drawn and averaged, and
    min_fraction the smallest fraction on the evenly spaced grid.
    """

    num_subsets: int = 10
    num_repeats: int = 5
    min_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.num_subsets < 2:
            raise ValueError("num_subsets must be >= 2 (a power law needs two points)")
        if self.num_repeats < 1:
            raise ValueError("num_repeats must be >= 1")
        if not 0.0 < self.min_fraction <= 1.0:
            raise ValueError(f"min_fraction must lie in (0, 1], got {self.min_fraction}")


def subset_schedule(config: CurveEstimationConfig) -> list[float]:
    """Evenly spaced subset fractions from min_fraction to 1.0 inclusive."""
    return [float(f) for f in np.linspace(config.min_fraction, 1.0, config.num_subsets)]


def _ols_loglog_init(sizes, losses):
    """Initial (a, b) from ordinary least squares on (log size, log loss)."""
    lx = np.log(sizes)
    ly = np.log(np.maximum(losses, 1e-12))
    slope, intercept = np.polyfit(lx, ly, 1)
    a0 = max(-slope, 1e-3)
    b0 = float(np.exp(intercept))
    return a0, max(b0, 1e-12)


def weighted_residual(sizes, losses, weights, a, b, c=0.0) -> float:
    """Weighted sum of squared residuals of the curve against the points."""
    pred = b * np.power(sizes, -a) + c
    return float(np.sum(weights * (losses - pred) ** 2))


def fit_power_law(points, fit_floor: bool = False) -> PowerLawCurve:
    """Fit loss(x) = b * x**(-a) (+ c with ``fit_floor``) to weighted points.

    Parameters
    ----------
    points : sequence of CurvePoint
        Measured (size, loss, weight) observations: at least 2 points at
        2 distinct sizes (3 with the floor). A point repeated with its
        weights summed fits identically to listing it multiple times.
    fit_floor : bool
        Also fit the lower-bound loss c >= 0.

    Returns
    -------
    PowerLawCurve
        Parameters minimizing sum_k w_k (loss_k - b*size_k**(-a) - c)**2.
        The fit is a damped Gauss-Newton descent initialized from
        log-log least squares; ``converged`` is False when the iteration
        cap was hit, in which case the best iterate is returned.

    Raises
    ------
    InsufficientDataError
        Fewer points than parameters.
    DegenerateFitError
        All losses are zero.
    """
    pts = list(points)
    n_params = 3 if fit_floor else 2
    if len(pts) < n_params:
        raise InsufficientDataError(
            f"need at least {n_params} points to fit {n_params} parameters, got {len(pts)}"
        )
    sizes = np.array([p.size for p in pts], dtype=float)
    losses = np.array([p.loss for p in pts], dtype=float)
    weights = np.array([p.weight for p in pts], dtype=float)
    if len(np.unique(sizes)) < n_params:
        raise InsufficientDataError(
            f"need {n_params} distinct sizes to identify {n_params} parameters"
        )
    if np.all(losses == 0):
        raise DegenerateFitError("all losses are zero; no curve to fit")

    # parametrize theta = (log a, log b[, xi]) with c = xi**2 so that the
    # positivity invariants hold at every iterate
    if fit_floor:
        c0 = 0.5 * float(losses.min())
        a0, b0 = _ols_loglog_init(sizes, np.maximum(losses - c0, 1e-12))
        theta = np.array([np.log(a0), np.log(b0), np.sqrt(max(c0, 1e-12))])
    else:
        a0, b0 = _ols_loglog_init(sizes, losses)
        theta = np.array([np.log(a0), np.log(b0)])

    def unpack(th):
        # wild trial steps may overflow exp; they evaluate to inf and are
        # rejected by the damping loop
        with np.errstate(over="ignore"):
            a = float(np.exp(th[0]))
            b = float(np.exp(th[1]))
        c = float(th[2] ** 2) if fit_floor else 0.0
        return a, b, c

    def sse(th):
        with np.errstate(over="ignore", invalid="ignore"):
            return weighted_residual(sizes, losses, weights, *unpack(th))

    damp = DAMP_INIT
    current = sse(theta)
    converged = False
    for _ in range(MAX_ITER):
        a, b, c = unpack(theta)
        xa = np.power(sizes, -a)
        resid = losses - (b * xa + c)
        # Jacobian of the model wrt theta
        cols = [-a * b * xa * np.log(sizes), b * xa]
        if fit_floor:
            cols.append(np.full_like(sizes, 2.0 * theta[2]))
        J = np.column_stack(cols)
        JW = J * weights[:, None]
        H = J.T @ JW
        g = JW.T @ resid
        accepted = False
        for _ in range(60):
            try:
                delta = np.linalg.solve(H + damp * np.eye(len(theta)), g)
            except np.linalg.LinAlgError:
                damp *= DAMP_UP
                continue
            trial = theta + delta
            trial_sse = sse(trial)
            if np.isfinite(trial_sse) and trial_sse <= current:
                theta, current = trial, trial_sse
                damp = max(damp / DAMP_DOWN, 1e-15)
                accepted = True
                break
            damp *= DAMP_UP
        if not accepted:
            converged = True  # no improving step exists at any damping: at a minimum
            break
        if np.linalg.norm(delta) <= PARAM_TOL * (np.linalg.norm(theta) + 1e-12):
            converged = True
            break

    a, b, c = unpack(theta)
    return PowerLawCurve(a=a, b=b, c=c, converged=converged)


@dataclass
class CurveEstimates:
    """Fitted curves for every slice plus the raw observations behind them."""

    slice_ids: tuple[str, ...]
    curves: list[PowerLawCurve]
    reliable: list[bool]
    # rows: (slice_id, repeat, fraction, subset_size, loss)
    observations: list[tuple[str, int, float, int, float]] = field(default_factory=list)
    queries: int = 0

    def to_csv(self, path) -> None:
        """Dump observations and fitted parameters for offline inspection."""
        index = {sid: i for i, sid in enumerate(self.slice_ids)}
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["slice_id", "repeat", "fraction", "subset_size", "loss",
                 "fitted_a", "fitted_b", "fitted_c", "reliable_flag"]
            )
            for sid, repeat, fraction, size, loss in self.observations:
                curve = self.curves[index[sid]]
                writer.writerow(
                    [sid, repeat, repr(fraction), size, repr(loss),
                     repr(curve.a), repr(curve.b), repr(curve.c),
                     int(self.reliable[index[sid]])]
                )


def subset_size(fraction: float, size: int) -> int:
    """Subset size convention shared with external trainers: round half up."""
    return max(1, int(np.floor(fraction * size + 0.5)))


def _fit_slice(sizes, losses, fit_floor):
    """Fit one slice, falling back to a near-flat curve when the fit fails."""
    order = np.argsort(sizes)
    sizes = np.asarray(sizes, dtype=float)[order]
    losses = np.asarray(losses, dtype=float)[order]
    # merge duplicate sizes (possible for very small slices): average losses
    uniq, inverse = np.unique(sizes, return_inverse=True)
    if len(uniq) != len(sizes):
        merged = np.zeros(len(uniq))
        counts = np.zeros(len(uniq))
        np.add.at(merged, inverse, losses)
        np.add.at(counts, inverse, 1.0)
        sizes, losses = uniq, merged / counts
    weights = sizes / sizes.max()
    points = [CurvePoint(int(s), float(l), float(w)) for s, l, w in zip(sizes, losses, weights)]
    try:
        curve = fit_power_law(points, fit_floor=fit_floor)
    except (InsufficientDataError, DegenerateFitError, ValueError) as exc:
        log.warning("curve fit failed (%s); using flat fallback", exc)
        fallback_b = max(float(losses[-1]), 1e-9)
        return PowerLawCurve(a=FALLBACK_EXPONENT, b=fallback_b, converged=False), False
    rss = weighted_residual(np.asarray(sizes), losses, weights, curve.a, curve.b, curve.c)
    signal = float(np.sum(weights * losses**2))
    ratio = np.sqrt(rss / signal) if signal > 0 else np.inf
    return curve, bool(ratio <= UNRELIABLE_RESIDUAL_RATIO)


def estimate_curves(
    oracle,
    partition: SlicePartition,
    config: CurveEstimationConfig,
    mode: str = "amortized",
    fit_floor: bool = False,
) -> CurveEstimates:
    """Estimate one learning curve per slice by querying a loss oracle.

    In ``amortized`` mode every query reduces all slices to the same
    fraction at once, so one model training yields a point on every
    slice's curve: exactly num_subsets * num_repeats queries total. In
    ``exhaustive`` mode one slice is reduced at a time while the others
    stay whole (n * num_subsets * num_repeats queries).

    Per-fraction losses are averaged across the repeats before a single
    fit per slice. Slices whose fit fails get a near-flat fallback curve
    and, like slices whose residual-to-signal ratio exceeds 0.5, are
    marked unreliable.
    """
    if mode not in ("amortized", "exhaustive"):
        raise ValueError(f"unknown estimation mode {mode!r}")
    sizes = partition.sizes
    if np.any(config.min_fraction * sizes < 2):
        smallest = int(sizes.min())
        raise ValueError(
            f"slices too small for min_fraction={config.min_fraction}: "
            f"need min_fraction * size >= 2, smallest slice has {smallest}"
        )
    fractions = subset_schedule(config)
    n = partition.n
    K, R = config.num_subsets, config.num_repeats

    # loss_sums[j, k] accumulates slice j's loss at fraction k over repeats
    loss_sums = np.zeros((n, K))
    observations: list[tuple[str, int, float, int, float]] = []
    queries = 0
    for r in range(R):
        repeat_seed = derive(config.seed, r)
        for k, f in enumerate(fractions):
            if mode == "amortized":
                losses = oracle.eval_fractions([f] * n, seed=repeat_seed)
                queries += 1
                for j in range(n):
                    loss_sums[j, k] += losses[j]
                    observations.append(
                        (partition.ids[j], r, f, subset_size(f, int(sizes[j])), float(losses[j]))
                    )
            else:
                for j in range(n):
                    fracs = [1.0] * n
                    fracs[j] = f
                    losses = oracle.eval_fractions(fracs, seed=repeat_seed)
                    queries += 1
                    loss_sums[j, k] += losses[j]
                    observations.append(
                        (partition.ids[j], r, f, subset_size(f, int(sizes[j])), float(losses[j]))
                    )
    avg_losses = loss_sums / R

    curves: list[PowerLawCurve] = []
    reliable: list[bool] = []
    for j in range(n):
        xs = [subset_size(f, int(sizes[j])) for f in fractions]
        curve, ok = _fit_slice(xs, avg_losses[j], fit_floor)
        curves.append(curve)
        reliable.append(ok)
    return CurveEstimates(
        slice_ids=partition.ids,
        curves=curves,
        reliable=reliable,
        observations=observations,
        queries=queries,
    )
