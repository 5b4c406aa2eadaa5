"""Synthetic scored populations and the two experiment base datasets.

Scores per group are drawn from a Beta family whose parameters are solved
numerically so that the mass above 0.5 matches the group's target positive
rate; the positive count is made exact (up to rounding) by inverse-CDF
sampling conditional on each side of the 0.5 cutoff.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize, stats

from .errors import EmptySelectionError, ValidationError

# scores are clamped into [SCORE_CLAMP, 1 - SCORE_CLAMP] before the logit
SCORE_CLAMP = 1e-6


@dataclass(frozen=True)
class ScoredRecord:
    """One individual: group membership, ground-truth score, feature vector."""

    id: int
    group: int
    score: float
    features: tuple[float, ...]

    def __post_init__(self):
        if self.group not in (0, 1):
            raise ValidationError(f"group must be 0 or 1, got {self.group!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score must lie in [0, 1], got {self.score!r}")
        if not all(math.isfinite(f) for f in self.features):
            raise ValidationError("features must all be finite")


@dataclass(frozen=True)
class PopulationSpec:
    """Calibration targets and knobs for the synthetic population."""

    n_group0: int
    n_group1: int
    target_positive_rate_group0: float
    target_positive_rate_group1: float
    feature_dim: int = 5
    proxy_strength: float = 0.8
    noise_scale: float = 1.0
    score_concentration: float = 1.0  # a + b of the per-group Beta score family
    seed: int = 0

    def __post_init__(self):
        for name in ("n_group0", "n_group1"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("target_positive_rate_group0", "target_positive_rate_group1"):
            rate = getattr(self, name)
            if not 0.0 < rate < 1.0:
                raise ValidationError(f"{name} must lie strictly inside (0, 1), got {rate}")
        if self.feature_dim < 2:
            raise ValidationError(f"feature_dim must be >= 2, got {self.feature_dim}")
        if not 0.0 <= self.proxy_strength <= 1.0:
            raise ValidationError(f"proxy_strength must lie in [0, 1], got {self.proxy_strength}")
        if self.noise_scale <= 0:
            raise ValidationError(f"noise_scale must be positive, got {self.noise_scale}")
        if self.score_concentration <= 0:
            raise ValidationError(
                f"score_concentration must be positive, got {self.score_concentration}"
            )


def _beta_shape(rate: float, concentration: float) -> tuple[float, float]:
    """Solve for Beta(a, b) with a + b = concentration and P(X >= 0.5) = rate."""
    lo = 1e-9 * concentration
    hi = concentration - lo

    def gap(a):
        return stats.beta.sf(0.5, a, concentration - a) - rate

    a = optimize.brentq(gap, lo, hi, xtol=1e-13)
    return a, concentration - a


def _group_scores(rng, n: int, rate: float, concentration: float) -> np.ndarray:
    """Draw n Beta scores with an exact (rounded) count of scores >= 0.5."""
    a, b = _beta_shape(rate, concentration)
    k = int(round(n * rate))
    split = stats.beta.cdf(0.5, a, b)
    u = rng.random(n)
    s = np.empty(n)
    s[:k] = stats.beta.ppf(split + u[:k] * (1.0 - split), a, b)
    s[k:] = stats.beta.ppf(u[k:] * split, a, b)
    np.clip(s, 0.0, 1.0, out=s)
    # guard the cutoff against ppf roundoff so the positive count is exact
    s[:k] = np.maximum(s[:k], 0.5)
    s[k:] = np.minimum(s[k:], np.nextafter(0.5, 0.0))
    return s


def generate_population(spec: PopulationSpec) -> list[ScoredRecord]:
    """Generate a seeded population calibrated to the spec's marginal rates.

    Informative features are noisy linear functions of logit(score); the last
    feature is a proxy correlated with group at spec.proxy_strength.
    """
    rng = np.random.default_rng(spec.seed)
    d = spec.feature_dim
    slopes = rng.uniform(0.5, 1.5, size=d - 1)

    s0 = _group_scores(rng, spec.n_group0, spec.target_positive_rate_group0,
                       spec.score_concentration)
    s1 = _group_scores(rng, spec.n_group1, spec.target_positive_rate_group1,
                       spec.score_concentration)
    scores = np.concatenate([s0, s1])
    groups = np.concatenate([np.zeros(spec.n_group0, dtype=int),
                             np.ones(spec.n_group1, dtype=int)])
    order = rng.permutation(scores.size)
    scores, groups = scores[order], groups[order]
    n = scores.size

    clamped = np.clip(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    logits = np.log(clamped / (1.0 - clamped))
    feats = np.empty((n, d))
    for j in range(d - 1):
        feats[:, j] = slopes[j] * logits + spec.noise_scale * rng.standard_normal(n)
    # standardized group indicator mixed with unit noise gives sample
    # correlation ~= proxy_strength
    rho = spec.proxy_strength
    g_std = (groups - groups.mean()) / groups.std()
    feats[:, d - 1] = rho * g_std + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)

    return [
        ScoredRecord(i, int(groups[i]), float(scores[i]), tuple(map(float, feats[i])))
        for i in range(n)
    ]


def make_base_dataset_A(pop: list[ScoredRecord], seed: int) -> list[ScoredRecord]:
    """Keep only group-0 records and reassign group by an independent fair coin.

    Scores and features are left untouched, so after reassignment neither
    carries any group signal: both the group split and the per-group positive
    rates are balanced in expectation.
    """
    whites = [r for r in pop if r.group == 0]
    if not whites:
        raise EmptySelectionError("population contains no group-0 records")
    rng = np.random.default_rng(seed)
    coins = rng.integers(0, 2, size=len(whites))
    return [replace(r, group=int(c)) for r, c in zip(whites, coins)]


def make_base_dataset_B(pop: list[ScoredRecord]) -> list[ScoredRecord]:
    """Identity: the unmodified population is the base dataset."""
    if not pop:
        raise ValidationError("population must be non-empty")
    return list(pop)


def population_header(feature_dim: int) -> list[str]:
    return ["id", "group", "score"] + [f"f{j}" for j in range(feature_dim)]


def write_population_csv(records: list[ScoredRecord], path) -> None:
    """Write records as CSV: id,group,score,f0,...  Reals keep 12 significant digits."""
    if not records:
        raise ValidationError("cannot export an empty population")
    d = len(records[0].features)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(population_header(d))
        for r in records:
            writer.writerow([r.id, r.group, format(r.score, ".12g")]
                            + [format(f, ".12g") for f in r.features])


def positive_rate(records: list[ScoredRecord], group: int, threshold: float = 0.5) -> float:
    """Fraction of a group's records with score >= threshold."""
    members = [r for r in records if r.group == group]
    if not members:
        raise EmptySelectionError(f"no records in group {group}")
    return sum(r.score >= threshold for r in members) / len(members)
