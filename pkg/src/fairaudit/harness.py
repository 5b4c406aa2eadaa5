"""Experiment orchestration: the 2x2 bias grid, seeded trials, and aggregation.

Seed scheme: every stream is derived from the config's base seed with
stable_hash, a SHA-256 based mix of (base_seed, *labels). Trial seeds use
stable_hash(base_seed, dataset_index, trial_index), so dataset cells and
trials are reproducible independently of execution order.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .bias import (ALL_BIAS_SPECS, BIASED_LABEL_POLICY, BIASED_SAMPLE_POLICY,
                   UNBIASED_LABEL_POLICY, UNBIASED_SAMPLE_POLICY, BiasSpec,
                   LabelPolicy, SamplePolicy, build_dataset)
from .datagen import (PopulationSpec, ScoredRecord, generate_population,
                      make_base_dataset_A, make_base_dataset_B)
from .errors import (DegenerateDatasetError, ExperimentError,
                     NumericalFailureError, ValidationError)
from .metrics import FAIR_POINTS, METRIC_NAMES, GroupedOutcomes, MetricReport, audit
from .model import ModelParams, fit, predict, split


def stable_hash(*parts) -> int:
    """Deterministic 63-bit seed derived from the given parts."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF


DEFAULT_POPULATION = PopulationSpec(
    n_group0=39780, n_group1=3551,
    target_positive_rate_group0=0.5408, target_positive_rate_group1=0.1217)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "A"
    population: PopulationSpec = DEFAULT_POPULATION
    biased_label_policy: LabelPolicy = BIASED_LABEL_POLICY
    unbiased_label_policy: LabelPolicy = UNBIASED_LABEL_POLICY
    biased_sample_policy: SamplePolicy = BIASED_SAMPLE_POLICY
    unbiased_sample_policy: SamplePolicy = UNBIASED_SAMPLE_POLICY
    model: ModelParams = ModelParams()
    trials: int = 20
    base_seed: int = 20260823
    min_cell_count: int = 10

    def __post_init__(self):
        if self.experiment not in ("A", "B"):
            raise ValidationError(f"experiment must be 'A' or 'B', got {self.experiment!r}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.min_cell_count < 1:
            raise ValidationError(f"min_cell_count must be >= 1, got {self.min_cell_count}")

    def to_dict(self) -> dict:
        pop = self.population
        return {
            "experiment": self.experiment,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "min_cell_count": self.min_cell_count,
            "population": {
                "n_group0": pop.n_group0,
                "n_group1": pop.n_group1,
                "positive_rate_group0": pop.target_positive_rate_group0,
                "positive_rate_group1": pop.target_positive_rate_group1,
                "feature_dim": pop.feature_dim,
                "proxy_strength": pop.proxy_strength,
                "noise_scale": pop.noise_scale,
                "score_concentration": pop.score_concentration,
            },
            "label_policy_biased": {
                "threshold_group0": self.biased_label_policy.threshold_group0,
                "threshold_group1": self.biased_label_policy.threshold_group1,
            },
            "label_policy_unbiased": {
                "threshold_group0": self.unbiased_label_policy.threshold_group0,
                "threshold_group1": self.unbiased_label_policy.threshold_group1,
            },
            "sample_policy_biased": _sample_policy_dict(self.biased_sample_policy),
            "sample_policy_unbiased": _sample_policy_dict(self.unbiased_sample_policy),
            "model": self.model.to_dict(),
        }


def _sample_policy_dict(p: SamplePolicy) -> dict:
    return {"cutoff": p.cutoff, "p_group0_high": p.p_group0_high,
            "p_group0_low": p.p_group0_low, "p_group1_high": p.p_group1_high,
            "p_group1_low": p.p_group1_low}


def _label_policy_from(section) -> LabelPolicy:
    return LabelPolicy(threshold_group0=section.getfloat("threshold_group0"),
                       threshold_group1=section.getfloat("threshold_group1"))


def _sample_policy_from(section) -> SamplePolicy:
    return SamplePolicy(cutoff=section.getfloat("cutoff"),
                        p_group0_high=section.getfloat("p_group0_high"),
                        p_group0_low=section.getfloat("p_group0_low"),
                        p_group1_high=section.getfloat("p_group1_high"),
                        p_group1_low=section.getfloat("p_group1_low"))


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from an INI-style config file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValidationError(f"config file not found or unreadable: {path}")
    try:
        exp = parser["experiment"] if "experiment" in parser else {}
        defaults = ExperimentConfig()
        kwargs = dict(
            experiment=exp.get("name", defaults.experiment),
            trials=int(exp.get("trials", defaults.trials)),
            base_seed=int(exp.get("base_seed", defaults.base_seed)),
            min_cell_count=int(exp.get("min_cell_count", defaults.min_cell_count)),
        )
        if "population" in parser:
            pop = parser["population"]
            dp = DEFAULT_POPULATION
            kwargs["population"] = PopulationSpec(
                n_group0=pop.getint("n_group0", dp.n_group0),
                n_group1=pop.getint("n_group1", dp.n_group1),
                target_positive_rate_group0=pop.getfloat("positive_rate_group0",
                                                         dp.target_positive_rate_group0),
                target_positive_rate_group1=pop.getfloat("positive_rate_group1",
                                                         dp.target_positive_rate_group1),
                feature_dim=pop.getint("feature_dim", dp.feature_dim),
                proxy_strength=pop.getfloat("proxy_strength", dp.proxy_strength),
                noise_scale=pop.getfloat("noise_scale", dp.noise_scale),
                score_concentration=pop.getfloat("score_concentration",
                                                 dp.score_concentration),
            )
        if "label_policy.biased" in parser:
            kwargs["biased_label_policy"] = _label_policy_from(parser["label_policy.biased"])
        if "label_policy.unbiased" in parser:
            kwargs["unbiased_label_policy"] = _label_policy_from(parser["label_policy.unbiased"])
        if "sample_policy.biased" in parser:
            kwargs["biased_sample_policy"] = _sample_policy_from(parser["sample_policy.biased"])
        if "sample_policy.unbiased" in parser:
            kwargs["unbiased_sample_policy"] = _sample_policy_from(
                parser["sample_policy.unbiased"])
        if "model" in parser:
            sec = parser["model"]
            dm = ModelParams()
            kwargs["model"] = ModelParams(
                lam=sec.getfloat("lambda", dm.lam),
                alpha=sec.getfloat("alpha", dm.alpha),
                max_iters=sec.getint("max_iters", dm.max_iters),
                tolerance=sec.getfloat("tolerance", dm.tolerance),
                train_fraction=sec.getfloat("train_fraction", dm.train_fraction),
                include_group_feature=sec.getboolean("include_group_feature",
                                                     dm.include_group_feature),
                prediction_threshold=sec.getfloat("prediction_threshold",
                                                  dm.prediction_threshold),
            )
        return ExperimentConfig(**kwargs)
    except (ValueError, configparser.Error) as e:
        raise ValidationError(f"invalid config {path}: {e}") from e


def bundled_config_path(name: str):
    """Path to a bundled config, e.g. 'experiment_A.cfg'."""
    from importlib.resources import files

    return files("fairaudit").joinpath("configs", name)


def build_base(config: ExperimentConfig) -> list[ScoredRecord]:
    """Generate the population and construct the experiment's base dataset."""
    pop_spec = replace(config.population, seed=stable_hash(config.base_seed, "population"))
    pop = generate_population(pop_spec)
    if config.experiment == "A":
        return make_base_dataset_A(pop, stable_hash(config.base_seed, "base-A"))
    return make_base_dataset_B(pop)


def run_trial(config: ExperimentConfig, bias_spec: BiasSpec, trial_seed: int,
              base: list[ScoredRecord] | None = None) -> MetricReport:
    """One pipeline pass: build -> split -> fit -> predict -> audit."""
    if base is None:
        base = build_base(config)
    data = build_dataset(base, bias_spec, stable_hash(trial_seed, "sample"),
                         biased_label_policy=config.biased_label_policy,
                         unbiased_label_policy=config.unbiased_label_policy,
                         biased_sample_policy=config.biased_sample_policy,
                         unbiased_sample_policy=config.unbiased_sample_policy,
                         min_cell_count=config.min_cell_count)
    train, test = split(data, config.model.train_fraction, stable_hash(trial_seed, "split"))
    model = fit(train, config.model)
    preds = predict(model, test)
    return audit(GroupedOutcomes.from_labeled(test, preds))


@dataclass
class TrialResult:
    trial: int
    seed: int
    report: MetricReport | None
    error: str = ""


@dataclass
class DatasetResult:
    bias_spec: BiasSpec
    trials: list[TrialResult]

    def metric_values(self, name: str) -> list[float]:
        values = []
        for t in self.trials:
            if t.report is None:
                continue
            mv = t.report.metric(name)
            if mv.status == "ok" and mv.value is not None:
                values.append(mv.value)
        return values

    def metric_mean(self, name: str) -> float | None:
        values = self.metric_values(name)
        return float(np.mean(values)) if values else None

    def metric_std(self, name: str) -> float | None:
        values = self.metric_values(name)
        return float(np.std(values)) if values else None

    def undefined_count(self, name: str) -> int:
        return sum(1 for t in self.trials
                   if t.report is not None and t.report.metric(name).status != "ok")

    @property
    def failures(self) -> list[TrialResult]:
        return [t for t in self.trials if t.report is None]


@dataclass
class ExperimentReport:
    config: dict
    datasets: dict[int, DatasetResult] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {"config": self.config, "datasets": {}}
        for index, result in sorted(self.datasets.items()):
            metrics = {}
            for name in METRIC_NAMES:
                metrics[name] = {
                    "mean": result.metric_mean(name),
                    "std": result.metric_std(name),
                    "undefined_count": result.undefined_count(name),
                    "trials": [
                        {"trial": t.trial, "seed": t.seed,
                         **t.report.metric(name).to_json_dict()}
                        for t in result.trials if t.report is not None
                    ],
                }
            out["datasets"][str(index)] = {
                "bias_spec": {"sample_bias": result.bias_spec.sample_bias,
                              "label_bias": result.bias_spec.label_bias},
                "metrics": metrics,
                "failures": [{"trial": t.trial, "seed": t.seed, "error": t.error}
                             for t in result.failures],
                "trial_seeds": [t.seed for t in result.trials],
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def write_csv(self, path) -> None:
        """Flat per-trial table: dataset, metric, trial, value, status."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "metric", "trial", "value", "status"])
            for index, result in sorted(self.datasets.items()):
                for t in result.trials:
                    for name in METRIC_NAMES:
                        if t.report is None:
                            writer.writerow([index, name, t.trial, "", "failed"])
                            continue
                        mv = t.report.metric(name)
                        value = "" if mv.value is None else format(mv.value, ".12g")
                        writer.writerow([index, name, t.trial, value, mv.status])


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run trials x 4 bias-grid datasets and aggregate per metric."""
    base = build_base(config)
    report = ExperimentReport(config=config.to_dict())
    for bias_spec in ALL_BIAS_SPECS:
        index = bias_spec.dataset_index
        trials = []
        for t in range(config.trials):
            seed = stable_hash(config.base_seed, index, t)
            try:
                trial_report = run_trial(config, bias_spec, seed, base=base)
                trials.append(TrialResult(trial=t, seed=seed, report=trial_report))
            except (DegenerateDatasetError, NumericalFailureError) as e:
                trials.append(TrialResult(trial=t, seed=seed, report=None, error=str(e)))
        if all(t.report is None for t in trials):
            raise ExperimentError(f"all trials of dataset {index} failed")
        report.datasets[index] = DatasetResult(bias_spec=bias_spec, trials=trials)
    return report


def rank_datasets(report: ExperimentReport, metric: str) -> tuple[list[int], list[int]]:
    """Datasets in ascending |mean - fair point|; undefined means are excluded.

    Returns (ordering, excluded); ties broken by dataset index.
    """
    if metric not in METRIC_NAMES:
        raise ValidationError(f"unknown metric {metric!r}")
    means = {index: result.metric_mean(metric)
             for index, result in report.datasets.items()}
    return rank_means(means, FAIR_POINTS[metric])


def rank_means(means: dict[int, float | None],
               fair_point: float) -> tuple[list[int], list[int]]:
    defined = sorted((abs(v - fair_point), k) for k, v in means.items() if v is not None)
    excluded = sorted(k for k, v in means.items() if v is None)
    return [k for _, k in defined], excluded
