"""Causal bias operators: per-group threshold labeling and probabilistic inclusion."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .datagen import ScoredRecord
from .errors import DegenerateDatasetError, ValidationError


@dataclass(frozen=True)
class LabelPolicy:
    """Per-group score thresholds; a record is labeled 1 iff score >= its group's threshold."""

    threshold_group0: float
    threshold_group1: float

    def __post_init__(self):
        for name in ("threshold_group0", "threshold_group1"):
            t = getattr(self, name)
            if not 0.0 <= t <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {t}")

    def threshold_for(self, group: int) -> float:
        return self.threshold_group1 if group == 1 else self.threshold_group0


@dataclass(frozen=True)
class SamplePolicy:
    """Inclusion probabilities per (group, score band) around a cutoff."""

    cutoff: float
    p_group0_high: float
    p_group0_low: float
    p_group1_high: float
    p_group1_low: float

    def __post_init__(self):
        for name in ("cutoff", "p_group0_high", "p_group0_low",
                      "p_group1_high", "p_group1_low"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")

    def inclusion_probability(self, group: int, score: float) -> float:
        high = score >= self.cutoff
        if group == 1:
            return self.p_group1_high if high else self.p_group1_low
        return self.p_group0_high if high else self.p_group0_low


@dataclass(frozen=True)
class LabeledRecord:
    record: ScoredRecord
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class BiasSpec:
    """Which cell of the 2x2 bias grid to materialize."""

    sample_bias: bool
    label_bias: bool

    @property
    def dataset_index(self) -> int:
        # grid numbering: 1 = none, 2 = sample only, 3 = label only, 4 = both
        return {(False, False): 1, (True, False): 2,
                (False, True): 3, (True, True): 4}[(self.sample_bias, self.label_bias)]


# the constants used throughout the experiments
BIASED_LABEL_POLICY = LabelPolicy(threshold_group0=0.3, threshold_group1=0.7)
UNBIASED_LABEL_POLICY = LabelPolicy(threshold_group0=0.5, threshold_group1=0.5)
BIASED_SAMPLE_POLICY = SamplePolicy(cutoff=0.5, p_group0_high=0.8, p_group0_low=0.2,
                                    p_group1_high=1.0, p_group1_low=1.0)
UNBIASED_SAMPLE_POLICY = SamplePolicy(cutoff=0.5, p_group0_high=0.5, p_group0_low=0.5,
                                      p_group1_high=0.5, p_group1_low=0.5)
# deterministic variant for exact unit tests
KEEP_ALL_SAMPLE_POLICY = SamplePolicy(cutoff=0.5, p_group0_high=1.0, p_group0_low=1.0,
                                      p_group1_high=1.0, p_group1_low=1.0)

ALL_BIAS_SPECS = (BiasSpec(False, False), BiasSpec(True, False),
                  BiasSpec(False, True), BiasSpec(True, True))


def apply_label_policy(pop: list[ScoredRecord], policy: LabelPolicy) -> list[LabeledRecord]:
    """Label each record 1 iff its score reaches its group's threshold; order preserved."""
    if not pop:
        raise ValidationError("population must be non-empty")
    return [LabeledRecord(r, int(r.score >= policy.threshold_for(r.group))) for r in pop]


def apply_sample_policy(pop: list[ScoredRecord], policy: SamplePolicy,
                        seed: int) -> list[ScoredRecord]:
    """Keep each record independently with its policy probability; order preserved."""
    if not pop:
        raise ValidationError("population must be non-empty")
    rng = np.random.default_rng(seed)
    u = rng.random(len(pop))
    return [r for r, x in zip(pop, u)
            if x < policy.inclusion_probability(r.group, r.score)]


def build_dataset(pop: list[ScoredRecord], spec: BiasSpec, seed: int, *,
                  biased_label_policy: LabelPolicy = BIASED_LABEL_POLICY,
                  unbiased_label_policy: LabelPolicy = UNBIASED_LABEL_POLICY,
                  biased_sample_policy: SamplePolicy = BIASED_SAMPLE_POLICY,
                  unbiased_sample_policy: SamplePolicy = UNBIASED_SAMPLE_POLICY,
                  min_cell_count: int = 10) -> list[LabeledRecord]:
    """Materialize one bias-grid cell: sample first, then label.

    Raises DegenerateDatasetError when any (group, label) cell ends up with
    fewer than min_cell_count records.
    """
    if not pop:
        raise ValidationError("population must be non-empty")
    sample_policy = biased_sample_policy if spec.sample_bias else unbiased_sample_policy
    label_policy = biased_label_policy if spec.label_bias else unbiased_label_policy
    kept = apply_sample_policy(pop, sample_policy, seed)
    if not kept:
        raise DegenerateDatasetError("sampling kept no records")
    labeled = apply_label_policy(kept, label_policy)
    counts = Counter((lr.record.group, lr.label) for lr in labeled)
    for g in (0, 1):
        for y in (0, 1):
            if counts[(g, y)] < min_cell_count:
                raise DegenerateDatasetError(
                    f"cell (group={g}, label={y}) has {counts[(g, y)]} records, "
                    f"fewer than the minimum {min_cell_count}")
    return labeled


def write_labeled_csv(records: list[LabeledRecord], path) -> None:
    """Write labeled records as CSV: id,group,score,label,f0,..."""
    import csv

    if not records:
        raise ValidationError("cannot export an empty dataset")
    d = len(records[0].record.features)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "group", "score", "label"] + [f"f{j}" for j in range(d)])
        for lr in records:
            r = lr.record
            writer.writerow([r.id, r.group, format(r.score, ".12g"), lr.label]
                            + [format(f, ".12g") for f in r.features])
