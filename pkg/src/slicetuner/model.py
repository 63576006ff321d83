"""Domain types plus the loss and unfairness metrics.

A dataset is split into disjoint slices; every other module works on
these value objects. All types are immutable after construction and all
functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROB_EPS = 1e-7  # clipping floor for predicted probabilities in log loss


@dataclass(frozen=True)
class SliceState:
    """One data slice: identity, current training size, and acquisition cost."""

    id: str
    size: int
    cost: float = 1.0
    validation_size: int = 500

    def __post_init__(self):
        if self.size < 0:
            raise ValueError(f"slice {self.id!r}: size must be >= 0, got {self.size}")
        if self.cost <= 0:
            raise ValueError(f"slice {self.id!r}: cost must be > 0, got {self.cost}")
        if self.validation_size < 1:
            raise ValueError(
                f"slice {self.id!r}: validation_size must be >= 1, got {self.validation_size}"
            )


@dataclass(frozen=True)
class SlicePartition:
    """An ordered set of disjoint slices that jointly cover the dataset."""

    slices: tuple[SliceState, ...]

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        if len(self.slices) < 1:
            raise ValueError("a partition needs at least one slice")
        ids = [s.id for s in self.slices]
        if len(set(ids)) != len(ids):
            raise ValueError(f"slice ids must be unique, got {ids}")

    @property
    def n(self) -> int:
        return len(self.slices)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.slices)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.slices], dtype=np.int64)

    @property
    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.slices], dtype=float)

    @property
    def validation_sizes(self) -> np.ndarray:
        return np.array([s.validation_size for s in self.slices], dtype=np.int64)

    def with_sizes(self, sizes) -> "SlicePartition":
        """Copy of the partition with updated per-slice training sizes."""
        sizes = [int(x) for x in sizes]
        if len(sizes) != self.n:
            raise ValueError(f"expected {self.n} sizes, got {len(sizes)}")
        return SlicePartition(
            tuple(
                SliceState(s.id, size, s.cost, s.validation_size)
                for s, size in zip(self.slices, sizes)
            )
        )


@dataclass(frozen=True)
class Budget:
    """Total acquisition budget and the amount already spent."""

    total: float
    spent: float = 0.0

    def __post_init__(self):
        if self.total < 0:
            raise ValueError(f"budget total must be >= 0, got {self.total}")
        if not 0 <= self.spent <= self.total + 1e-9:
            raise ValueError(f"spent must lie in [0, total], got {self.spent} of {self.total}")

    @property
    def remaining(self) -> float:
        return self.total - self.spent

    def spend(self, amount: float) -> "Budget":
        return Budget(self.total, self.spent + amount)


@dataclass(frozen=True)
class LossReport:
    """Per-slice and aggregate loss plus the equalized-error-rate gaps."""

    per_slice_loss: tuple[float, ...]
    overall_loss: float
    avg_eer: float = field(init=False)
    max_eer: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "per_slice_loss", tuple(float(x) for x in self.per_slice_loss))
        avg, mx = unfairness(self.per_slice_loss, self.overall_loss)
        object.__setattr__(self, "avg_eer", avg)
        object.__setattr__(self, "max_eer", mx)


def loss_report(per_slice_loss, validation_sizes) -> LossReport:
    """Build a LossReport with the overall loss taken on the union of
    validation sets, i.e. the validation-size-weighted mean of the
    per-slice losses (reduces to the plain mean for equal-sized sets)."""
    losses = np.asarray(per_slice_loss, dtype=float)
    weights = np.asarray(validation_sizes, dtype=float)
    if losses.shape != weights.shape or losses.size == 0:
        raise ValueError("per_slice_loss and validation_sizes must match and be nonempty")
    overall = float(np.sum(losses * weights) / np.sum(weights))
    return LossReport(tuple(losses), overall)


def log_loss(predicted_probs, labels) -> float:
    """Mean binary cross-entropy of predicted probabilities against 0/1 labels.

    Probabilities are clipped to [1e-7, 1 - 1e-7] before evaluation so a
    confident miss stays finite.
    """
    probs = np.asarray(predicted_probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if probs.ndim != 1 or probs.shape != y.shape:
        raise ValueError(f"probs and labels must be equal-length vectors, got {probs.shape} vs {y.shape}")
    if probs.size == 0:
        raise ValueError("log_loss needs at least one prediction")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


def unfairness(per_slice_loss, overall_loss: float) -> tuple[float, float]:
    """Mean and max absolute gap between each slice's loss and the overall loss.

    The pair is the (avg EER, max EER) unfairness measure; it needs no
    sensitive attributes, only the per-slice losses.
    """
    losses = np.asarray(per_slice_loss, dtype=float)
    if losses.size == 0:
        raise ValueError("unfairness needs at least one slice loss")
    gaps = np.abs(losses - float(overall_loss))
    return float(np.mean(gaps)), float(np.max(gaps))


def normalize_costs(avg_task_times) -> list[float]:
    """Turn average task completion times into per-example acquisition costs.

    Each cost is time / min(time) rounded half-up to one decimal, so the
    cheapest slice has cost exactly 1.0.
    """
    times = np.asarray(avg_task_times, dtype=float)
    if times.size == 0:
        raise ValueError("normalize_costs needs at least one time")
    if np.any(times <= 0):
        raise ValueError("task times must be positive")
    ratios = times / times.min()
    # round half away from zero; ratios are >= 1 so this is plain half-up
    return [math.floor(r * 10.0 + 0.5) / 10.0 for r in ratios]
