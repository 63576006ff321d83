"""Config-driven experiment runner.

Experiments compare acquisition methods (no-op original, uniform, water
filling, one-shot, and the three iterative strategies) on a shared
scenario: every method in a trial starts from an identically seeded
fresh world, spends the same budget, and is scored by the final loss
report. Per-trial rows and aggregate statistics are written as CSV.

Config files are flat ``key = value`` text (schema_version 1), one pair
per line, ``#`` comments allowed::

    schema_version = 1
    name = demo
    trials = 10
    seed = 1234
    budget = 3000
    lambda = 1.0
    validation_size = 500
    methods = original, uniform, water_filling, moderate

    curve.num_subsets = 10
    curve.num_repeats = 5
    curve.min_fraction = 0.1

    iterative.min_slice_size = 10
    iterative.initial_limit = 1.0
    iterative.moderate_step = 1.0
    iterative.aggressive_factor = 2.0
    iterative.max_iterations = 50

    slices = s0, s1
    slice.s0.size = 200          # slice.s0.time = 82.1 may replace costs
    slice.s0.cost = 1.0
    slice.s1.size = 200
    slice.s1.cost = 1.0

    oracle.kind = synthetic      # or: trainer
    oracle.noise_sigma = 0.02
    oracle.s0.a = 0.6            # per-slice ground-truth curve
    oracle.s0.b = 5.0
    oracle.s1.a = 1.0
    oracle.s1.b = 2.0
    # oracle.s0.c = 0.0          # optional floor
    # oracle.s0.pool = 100000    # optional acquirable pool
    # oracle.s0.kappa = 0, 0.05  # optional influence row (diagonal 0)
    # trainer kind instead:
    # oracle.command = python -m slicetuner_trainer --slices 3 --seed {seed}
    # oracle.timeout = 120
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import (
    AGGRESSIVE,
    CONSERVATIVE,
    MODERATE,
    IterativeConfig,
    run_iterative,
    uniform_allocate,
    water_filling_allocate,
)
from .curves import CurveEstimationConfig, estimate_curves
from .errors import ConfigError, SliceTunerError
from .model import SlicePartition, SliceState, loss_report, normalize_costs
from .optimizer import AllocationProblem, one_shot_allocate
from .oracle import CountingOracle, SyntheticWorld, TrainerEndpoint, TrainerProcess
from .seeding import derive

log = logging.getLogger(__name__)

ORIGINAL = "original"
UNIFORM = "uniform"
WATER_FILLING = "water_filling"
ONE_SHOT = "one_shot"
METHODS = (ORIGINAL, UNIFORM, WATER_FILLING, ONE_SHOT, CONSERVATIVE, MODERATE, AGGRESSIVE)

RAW_CSV = "raw.csv"
SUMMARY_CSV = "summary.csv"


@dataclass(frozen=True)
class SliceSpec:
    id: str
    size: int
    cost: float


@dataclass(frozen=True)
class SyntheticOracleSpec:
    a: tuple[float, ...]
    b: tuple[float, ...]
    c: tuple[float, ...]
    kappa: tuple[tuple[float, ...], ...] | None
    noise_sigma: float
    kappa_max: float
    pools: tuple[int, ...] | None


@dataclass(frozen=True)
class TrainerOracleSpec:
    command: str
    timeout: float


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    slices: tuple[SliceSpec, ...]
    oracle: SyntheticOracleSpec | TrainerOracleSpec
    methods: tuple[str, ...]
    budget: float
    lam: float = 1.0
    num_trials: int = 10
    seed: int = 0
    validation_size: int = 500
    out_dir: str | None = None
    curve_num_subsets: int = 10
    curve_num_repeats: int = 5
    curve_min_fraction: float = 0.1
    min_slice_size: int = 1
    initial_limit: float = 1.0
    moderate_step: float = 1.0
    aggressive_factor: float = 2.0
    max_iterations: int = 50

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        if self.num_trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.slices:
            raise ConfigError("at least one slice is required")

    def partition(self) -> SlicePartition:
        return SlicePartition(
            tuple(
                SliceState(s.id, s.size, s.cost, self.validation_size)
                for s in self.slices
            )
        )

    def curve_config(self, seed: int) -> CurveEstimationConfig:
        return CurveEstimationConfig(
            num_subsets=self.curve_num_subsets,
            num_repeats=self.curve_num_repeats,
            min_fraction=self.curve_min_fraction,
            seed=seed,
        )

    def iterative_config(self, strategy: str) -> IterativeConfig:
        constant = {
            CONSERVATIVE: 0.0,
            MODERATE: self.moderate_step,
            AGGRESSIVE: self.aggressive_factor,
        }[strategy]
        return IterativeConfig(
            min_slice_size=self.min_slice_size,
            initial_limit=self.initial_limit,
            strategy=strategy,
            strategy_constant=constant,
            lam=self.lam,
            max_iterations=self.max_iterations,
        )


# --------------------------------------------------------------------------
# config file parsing
# --------------------------------------------------------------------------

_SCALAR_KEYS = {
    "schema_version", "name", "trials", "seed", "budget", "lambda",
    "validation_size", "out_dir",
    "curve.num_subsets", "curve.num_repeats", "curve.min_fraction",
    "iterative.min_slice_size", "iterative.initial_limit",
    "iterative.moderate_step", "iterative.aggressive_factor",
    "iterative.max_iterations",
    "oracle.kind", "oracle.noise_sigma", "oracle.kappa_max",
    "oracle.command", "oracle.timeout",
}
_LIST_KEYS = {"methods", "slices"}


def parse_flat_file(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a raw string mapping."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _to_int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _to_float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _split_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def build_config(raw: dict[str, str]) -> ExperimentConfig:
    """Validate a raw key mapping and build the typed config."""
    raw = dict(raw)
    version = raw.pop("schema_version", None)
    if version != "1":
        raise ConfigError(f"schema_version must be 1, got {version!r}")
    if "slices" not in raw:
        raise ConfigError("missing key 'slices'")
    slice_ids = _split_list(raw.pop("slices"))
    if not slice_ids:
        raise ConfigError("'slices' lists no slice ids")
    if "methods" not in raw:
        raise ConfigError("missing key 'methods'")
    methods = tuple(_split_list(raw.pop("methods")))

    per_slice_keys = {"size", "cost", "time"}
    per_oracle_keys = {"a", "b", "c", "pool", "kappa"}
    slice_vals: dict[str, dict[str, str]] = {sid: {} for sid in slice_ids}
    oracle_vals: dict[str, dict[str, str]] = {sid: {} for sid in slice_ids}
    for key in list(raw):
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "slice":
            _, sid, attr = parts
            if sid not in slice_vals or attr not in per_slice_keys:
                raise ConfigError(f"unknown config key {key!r}")
            slice_vals[sid][attr] = raw.pop(key)
        elif len(parts) == 3 and parts[0] == "oracle" and parts[1] in oracle_vals:
            _, sid, attr = parts
            if attr not in per_oracle_keys:
                raise ConfigError(f"unknown config key {key!r}")
            oracle_vals[sid][attr] = raw.pop(key)

    scalars = {}
    for key in list(raw):
        if key in _SCALAR_KEYS:
            scalars[key] = raw.pop(key)
        else:
            raise ConfigError(f"unknown config key {key!r}")

    # slice specs; 'time' converts to costs when no explicit costs are given
    sizes = {}
    for sid in slice_ids:
        if "size" not in slice_vals[sid]:
            raise ConfigError(f"missing key 'slice.{sid}.size'")
        sizes[sid] = _to_int(f"slice.{sid}.size", slice_vals[sid]["size"])
    have_cost = [sid for sid in slice_ids if "cost" in slice_vals[sid]]
    have_time = [sid for sid in slice_ids if "time" in slice_vals[sid]]
    if have_time and have_cost:
        raise ConfigError("give either slice costs or slice times, not both")
    if have_time:
        if len(have_time) != len(slice_ids):
            raise ConfigError("slice times must be given for every slice")
        times = [_to_float(f"slice.{sid}.time", slice_vals[sid]["time"]) for sid in slice_ids]
        costs = dict(zip(slice_ids, normalize_costs(times)))
    else:
        costs = {
            sid: _to_float(f"slice.{sid}.cost", slice_vals[sid].get("cost", "1.0"))
            for sid in slice_ids
        }
    slices = tuple(SliceSpec(sid, sizes[sid], costs[sid]) for sid in slice_ids)

    kind = scalars.get("oracle.kind", "synthetic")
    if kind == "synthetic":
        a, b, c, pools, kappa_rows = [], [], [], [], []
        for sid in slice_ids:
            vals = oracle_vals[sid]
            if "a" not in vals or "b" not in vals:
                raise ConfigError(f"synthetic oracle needs oracle.{sid}.a and oracle.{sid}.b")
            a.append(_to_float(f"oracle.{sid}.a", vals["a"]))
            b.append(_to_float(f"oracle.{sid}.b", vals["b"]))
            c.append(_to_float(f"oracle.{sid}.c", vals.get("c", "0")))
            pools.append(_to_int(f"oracle.{sid}.pool", vals["pool"]) if "pool" in vals else None)
            if "kappa" in vals:
                row = [_to_float(f"oracle.{sid}.kappa", v) for v in _split_list(vals["kappa"])]
                if len(row) != len(slice_ids):
                    raise ConfigError(f"oracle.{sid}.kappa needs {len(slice_ids)} entries")
                kappa_rows.append(tuple(row))
            else:
                kappa_rows.append(tuple([0.0] * len(slice_ids)))
        has_pools = any(p is not None for p in pools)
        if has_pools and not all(p is not None for p in pools):
            raise ConfigError("give oracle.<id>.pool for every slice or none")
        kappa = tuple(kappa_rows)
        if all(all(v == 0 for v in row) for row in kappa):
            kappa = None
        oracle_spec: SyntheticOracleSpec | TrainerOracleSpec = SyntheticOracleSpec(
            a=tuple(a),
            b=tuple(b),
            c=tuple(c),
            kappa=kappa,
            noise_sigma=_to_float("oracle.noise_sigma", scalars.get("oracle.noise_sigma", "0")),
            kappa_max=_to_float("oracle.kappa_max", scalars.get("oracle.kappa_max", "0.2")),
            pools=tuple(pools) if has_pools else None,
        )
    elif kind == "trainer":
        if "oracle.command" not in scalars:
            raise ConfigError("trainer oracle needs oracle.command")
        for sid in slice_ids:
            if oracle_vals[sid]:
                raise ConfigError(f"per-slice oracle keys are only for the synthetic kind")
        oracle_spec = TrainerOracleSpec(
            command=scalars["oracle.command"],
            timeout=_to_float("oracle.timeout", scalars.get("oracle.timeout", "60")),
        )
    else:
        raise ConfigError(f"oracle.kind must be synthetic or trainer, got {kind!r}")

    try:
        return ExperimentConfig(
            name=scalars.get("name", "experiment"),
            slices=slices,
            oracle=oracle_spec,
            methods=methods,
            budget=_to_float("budget", scalars.get("budget", "0")),
            lam=_to_float("lambda", scalars.get("lambda", "1.0")),
            num_trials=_to_int("trials", scalars.get("trials", "10")),
            seed=_to_int("seed", scalars.get("seed", "0")),
            validation_size=_to_int("validation_size", scalars.get("validation_size", "500")),
            out_dir=scalars.get("out_dir"),
            curve_num_subsets=_to_int("curve.num_subsets", scalars.get("curve.num_subsets", "10")),
            curve_num_repeats=_to_int("curve.num_repeats", scalars.get("curve.num_repeats", "5")),
            curve_min_fraction=_to_float(
                "curve.min_fraction", scalars.get("curve.min_fraction", "0.1")
            ),
            min_slice_size=_to_int(
                "iterative.min_slice_size", scalars.get("iterative.min_slice_size", "1")
            ),
            initial_limit=_to_float(
                "iterative.initial_limit", scalars.get("iterative.initial_limit", "1.0")
            ),
            moderate_step=_to_float(
                "iterative.moderate_step", scalars.get("iterative.moderate_step", "1.0")
            ),
            aggressive_factor=_to_float(
                "iterative.aggressive_factor", scalars.get("iterative.aggressive_factor", "2.0")
            ),
            max_iterations=_to_int(
                "iterative.max_iterations", scalars.get("iterative.max_iterations", "50")
            ),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_flat_file(text))


# --------------------------------------------------------------------------
# running experiments
# --------------------------------------------------------------------------


def build_oracle(config: ExperimentConfig, seed: int):
    """Fresh oracle for one (trial, method) run."""
    spec = config.oracle
    if isinstance(spec, SyntheticOracleSpec):
        kappa = np.array(spec.kappa) if spec.kappa is not None else None
        return SyntheticWorld(
            slice_ids=[s.id for s in config.slices],
            a=spec.a,
            b=spec.b,
            c=spec.c,
            sizes=[s.size for s in config.slices],
            kappa=kappa,
            noise_sigma=spec.noise_sigma,
            seed=seed,
            pool_limit=spec.pools,
            kappa_max=spec.kappa_max,
        )
    command = spec.command.replace("{seed}", str(seed))
    return TrainerProcess(TrainerEndpoint(command=command, timeout=spec.timeout))


@dataclass
class MethodOutcome:
    method: str
    trial: int
    seed: int
    world_digest: str
    status: str
    loss: float = float("nan")
    avg_eer: float = float("nan")
    max_eer: float = float("nan")
    per_slice_loss: tuple[float, ...] = ()
    acquired: tuple[int, ...] = ()
    iterations: int = 0
    spent: float = 0.0
    residual_ok: bool = True


def _trainer_partition(config: ExperimentConfig, oracle) -> SlicePartition:
    """Partition for a trainer oracle, trusting its reported sizes."""
    partition = config.partition()
    if isinstance(oracle, TrainerProcess) and oracle.slice_ids:
        if set(oracle.slice_ids) != set(partition.ids):
            raise ConfigError(
                f"trainer slices {oracle.slice_ids} do not match config slices {partition.ids}"
            )
        sizes = dict(zip(oracle.slice_ids, oracle.sizes))
        partition = partition.with_sizes([sizes[i] for i in partition.ids])
    return partition


def run_method(method: str, config: ExperimentConfig, oracle, seed: int) -> MethodOutcome:
    """Run one acquisition method against a fresh oracle and score it."""
    partition = _trainer_partition(config, oracle)
    n = partition.n
    budget = config.budget
    digest = oracle.digest()
    acquired = tuple([0] * n)
    iterations = 0
    spent = 0.0
    residual_ok = True
    max_cost = float(partition.costs.max())

    if method == ORIGINAL:
        pass
    elif method in (UNIFORM, WATER_FILLING):
        allocate = uniform_allocate if method == UNIFORM else water_filling_allocate
        plan = allocate(partition, budget)
        ack = oracle.acquire(plan.d)
        acquired = ack.realized
        spent = float(partition.costs @ np.asarray(acquired))
        residual_ok = spent <= budget + 1e-9 and budget - spent < max_cost + 1e-9
    elif method == ONE_SHOT:
        cc = config.curve_config(seed=derive(seed, 1))
        est = estimate_curves(oracle, partition, cc)
        problem = AllocationProblem(
            est.curves, partition.sizes, partition.costs, budget, lam=config.lam
        )
        plan = one_shot_allocate(problem)
        ack = oracle.acquire(plan.d)
        acquired = ack.realized
        spent = float(partition.costs @ np.asarray(acquired))
        iterations = 1
        residual_ok = spent <= budget + 1e-9 and budget - spent < max_cost + 1e-9
    elif method in (CONSERVATIVE, MODERATE, AGGRESSIVE):
        cc = config.curve_config(seed=derive(seed, 1))
        outcome = run_iterative(
            partition, oracle, cc, config.iterative_config(method), budget
        )
        acquired = outcome.total_acquired
        iterations = len(outcome.iterations)
        spent = outcome.budget.spent
        residual_ok = spent <= budget + 1e-9
    else:
        raise ConfigError(f"unknown method {method!r}")

    losses = oracle.eval_fractions([1.0] * n, seed=derive(seed, 2))
    report = loss_report(losses, partition.validation_sizes)
    return MethodOutcome(
        method=method,
        trial=-1,
        seed=seed,
        world_digest=digest,
        status="ok",
        loss=report.overall_loss,
        avg_eer=report.avg_eer,
        max_eer=report.max_eer,
        per_slice_loss=report.per_slice_loss,
        acquired=acquired,
        iterations=iterations,
        spent=spent,
        residual_ok=residual_ok,
    )


@dataclass
class ComparisonReport:
    """Per-trial outcomes plus aggregate statistics for every method."""

    config: ExperimentConfig
    outcomes: list[MethodOutcome]
    summary: dict[str, dict] = field(default_factory=dict)
    warnings: int = 0
    out_dir: Path | None = None

    def aggregate(self) -> None:
        self.summary = {}
        self.warnings = 0
        n = len(self.config.slices)
        for method in self.config.methods:
            rows = [o for o in self.outcomes if o.method == method]
            ok = [o for o in rows if o.status == "ok"]
            failures = len(rows) - len(ok)
            self.warnings += failures
            stats: dict = {"trials_ok": len(ok), "failures": failures}
            for name in ("loss", "avg_eer", "max_eer", "iterations", "spent"):
                vals = np.array([getattr(o, name) for o in ok], dtype=float)
                if len(vals):
                    mean = float(np.mean(vals))
                    se = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
                else:
                    mean, se = float("nan"), float("nan")
                stats[f"{name}_mean"] = mean
                stats[f"{name}_se"] = se
            if ok:
                acq = np.array([o.acquired for o in ok], dtype=float)
                stats["acquired_mean"] = tuple(float(v) for v in acq.mean(axis=0))
            else:
                stats["acquired_mean"] = tuple([float("nan")] * n)
            stats["residual_ok_all"] = all(o.residual_ok for o in ok)
            self.summary[method] = stats

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ids = [s.id for s in self.config.slices]
        with open(out / RAW_CSV, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["trial", "method", "seed", "world_digest", "status", "budget",
                 "loss", "avg_eer", "max_eer", "iterations", "spent", "residual_ok"]
                + [f"loss_{i}" for i in ids] + [f"acquired_{i}" for i in ids]
            )
            for o in self.outcomes:
                losses = list(o.per_slice_loss) or [float("nan")] * len(ids)
                acquired = list(o.acquired) or [0] * len(ids)
                writer.writerow(
                    [o.trial, o.method, o.seed, o.world_digest, o.status,
                     repr(self.config.budget), repr(o.loss), repr(o.avg_eer),
                     repr(o.max_eer), o.iterations, repr(o.spent), int(o.residual_ok)]
                    + [repr(v) for v in losses] + [int(v) for v in acquired]
                )
        with open(out / SUMMARY_CSV, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["method", "trials_ok", "failures",
                 "loss_mean", "loss_se", "avg_eer_mean", "avg_eer_se",
                 "max_eer_mean", "max_eer_se", "iterations_mean", "spent_mean",
                 "residual_ok_all"] + [f"acquired_mean_{i}" for i in ids]
            )
            for method in self.config.methods:
                s = self.summary[method]
                writer.writerow(
                    [method, s["trials_ok"], s["failures"],
                     repr(s["loss_mean"]), repr(s["loss_se"]),
                     repr(s["avg_eer_mean"]), repr(s["avg_eer_se"]),
                     repr(s["max_eer_mean"]), repr(s["max_eer_se"]),
                     repr(s["iterations_mean"]), repr(s["spent_mean"]),
                     int(s["residual_ok_all"])]
                    + [repr(v) for v in s["acquired_mean"]]
                )
        self.out_dir = out
        return out


def run_experiment(config: ExperimentConfig, out_dir=None) -> ComparisonReport:
    """Run every configured method across seeded trials and aggregate.

    Within one trial all methods see identically seeded fresh worlds
    (verified by the logged world digest); trials use seeds derived from
    the master seed. The full run is deterministic given the config.
    """
    outcomes: list[MethodOutcome] = []
    for trial in range(config.num_trials):
        trial_seed = derive(config.seed, trial)
        for method in config.methods:
            oracle = build_oracle(config, trial_seed)
            try:
                outcome = run_method(method, config, oracle, trial_seed)
                outcome.trial = trial
            except (SliceTunerError, ValueError) as exc:
                log.warning("trial %d method %s failed: %s", trial, method, exc)
                outcome = MethodOutcome(
                    method=method, trial=trial, seed=trial_seed,
                    world_digest="", status=f"failed:{type(exc).__name__}",
                )
            finally:
                if isinstance(oracle, TrainerProcess):
                    oracle.close()
            outcomes.append(outcome)
    report = ComparisonReport(config=config, outcomes=outcomes)
    report.aggregate()
    destination = out_dir or config.out_dir
    if destination is not None:
        report.write(destination)
    return report


# --------------------------------------------------------------------------
# estimation-mode comparison and plot data
# --------------------------------------------------------------------------

ESTIMATION_CSV = "estimation_comparison.csv"


@dataclass
class EstimationComparison:
    """Amortized vs exhaustive curve estimation on paired seeds."""

    queries_amortized: int
    queries_exhaustive: int
    rows: list[dict]
    wall_time: dict[str, float]

    def mean_loss(self, mode: str) -> float:
        vals = [r["loss"] for r in self.rows if r["mode"] == mode]
        return float(np.mean(vals))

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / ESTIMATION_CSV, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["mode", "trial", "loss", "avg_eer", "max_eer", "iterations",
                 "estimation_queries", "queries_per_pass"]
            )
            for r in self.rows:
                writer.writerow(
                    [r["mode"], r["trial"], repr(r["loss"]), repr(r["avg_eer"]),
                     repr(r["max_eer"]), r["iterations"], r["queries"],
                     self.queries_amortized if r["mode"] == "amortized"
                     else self.queries_exhaustive]
                )
        return out


def compare_estimation_modes(config: ExperimentConfig, out_dir=None) -> EstimationComparison:
    """Pit amortized curve estimation against the exhaustive scheme.

    Both modes run the moderate iterative method on identically seeded
    worlds; the synthetic oracle is required since exhaustive mode would
    be prohibitively expensive against a real trainer. Reports the
    per-pass query counts (num_subsets * num_repeats versus n times
    that), wall time, and the final loss metrics per paired trial.
    """
    if not isinstance(config.oracle, SyntheticOracleSpec):
        raise ConfigError("estimation comparison supports only the synthetic oracle")
    partition = config.partition()

    # query cost of a single estimation pass in each mode
    counts = {}
    for mode in ("amortized", "exhaustive"):
        counter = CountingOracle(build_oracle(config, derive(config.seed, 0)))
        cc = config.curve_config(seed=derive(config.seed, 0))
        estimate_curves(counter, partition, cc, mode=mode)
        counts[mode] = counter.queries

    rows: list[dict] = []
    wall = {"amortized": 0.0, "exhaustive": 0.0}
    for trial in range(config.num_trials):
        trial_seed = derive(config.seed, trial)
        for mode in ("amortized", "exhaustive"):
            oracle = CountingOracle(build_oracle(config, trial_seed))
            cc = config.curve_config(seed=derive(trial_seed, 1))
            start = time.perf_counter()
            outcome = run_iterative(
                partition, oracle, cc, config.iterative_config(MODERATE),
                config.budget, estimation_mode=mode,
            )
            wall[mode] += time.perf_counter() - start
            losses = oracle.eval_fractions([1.0] * partition.n, seed=derive(trial_seed, 2))
            report = loss_report(losses, partition.validation_sizes)
            rows.append(
                {"mode": mode, "trial": trial, "loss": report.overall_loss,
                 "avg_eer": report.avg_eer, "max_eer": report.max_eer,
                 "iterations": len(outcome.iterations), "queries": oracle.queries}
            )
    comparison = EstimationComparison(
        queries_amortized=counts["amortized"],
        queries_exhaustive=counts["exhaustive"],
        rows=rows,
        wall_time=wall,
    )
    destination = out_dir or config.out_dir
    if destination is not None:
        comparison.write(destination)
    return comparison


def emit_plot_data(reports, path) -> Path:
    """Write long-format rows (method, budget, trial, metrics) for plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "budget", "trial", "loss", "avg_eer", "max_eer"])
        for report in reports:
            for o in report.outcomes:
                if o.status != "ok":
                    continue
                writer.writerow(
                    [o.method, repr(report.config.budget), o.trial,
                     repr(o.loss), repr(o.avg_eer), repr(o.max_eer)]
                )
    return path
