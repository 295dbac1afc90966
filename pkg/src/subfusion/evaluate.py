"""Metrics and the three-arm comparison experiment.

Accuracy, per-class accuracy, confusion counts, and mean average precision
are computed from fused per-class scores. The comparison runner trains, on
identical splits per seed, a no-subdivision baseline, the clustered
subdivision model, and a random-grouping ablation, so the contribution of the
clustering itself is isolated.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .classifier import SfmConfig, SfmModel, predict_sfm_batch, train_sfm
from .data import LabeledDataset, SplitSpec, split_stratified
from .errors import InvalidConfig, LengthMismatch, NoPositives
from .synth import Figure1Config, gen_figure1


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray  # (L, L), rows = truth, columns = prediction
    map_score: float
    per_class_ap: np.ndarray  # NaN for classes with no positives
    n_test: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy.tolist(),
            "confusion": self.confusion.tolist(),
            "map": self.map_score,
            "per_class_ap": [None if np.isnan(v) else float(v) for v in self.per_class_ap],
            "n_test": self.n_test,
        }


def accuracy_metrics(
    preds: np.ndarray, truth: np.ndarray, n_classes: int
) -> tuple[float, np.ndarray, np.ndarray]:
    """Overall accuracy, per-class accuracy, and the confusion matrix.

    Per-class accuracy is the confusion diagonal over the row sum; classes
    absent from ``truth`` get 0 and a warning.
    """
    preds = np.asarray(preds, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if preds.shape != truth.shape or preds.ndim != 1:
        raise LengthMismatch(f"preds {preds.shape} vs truth {truth.shape}")
    if preds.size == 0:
        raise LengthMismatch("empty prediction array")
    for name, arr in (("preds", preds), ("truth", truth)):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise InvalidConfig(f"{name} contain labels outside [0, {n_classes})")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (truth, preds), 1)
    accuracy = float(np.trace(confusion)) / preds.size
    row_sums = confusion.sum(axis=1)
    empty = np.flatnonzero(row_sums == 0)
    if empty.size:
        warnings.warn(f"classes with no test samples: {empty.tolist()}", NoPositives)
    per_class = np.where(row_sums > 0, np.diag(confusion) / np.maximum(row_sums, 1), 0.0)
    return accuracy, per_class, confusion


def mean_average_precision(
    scores: np.ndarray, truth: np.ndarray
) -> tuple[float, np.ndarray]:
    """One-vs-rest mean average precision from per-class scores.

    For each class, samples are ranked by that class's score (descending,
    ties broken by sample index) and AP is the mean of precision values taken
    at each positive's rank. Classes with no positives are excluded from the
    mean, flagged with a warning, and reported as NaN.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.int64)
    if scores.ndim != 2 or truth.shape != (scores.shape[0],):
        raise LengthMismatch(f"scores {scores.shape} vs truth {truth.shape}")
    if not np.all(np.isfinite(scores)):
        raise InvalidConfig("scores contain non-finite values")
    n, n_classes = scores.shape
    per_class = np.full(n_classes, np.nan)
    for c in range(n_classes):
        positives = truth == c
        n_pos = int(positives.sum())
        if n_pos == 0:
            continue
        # lexsort: last key is primary, so order by -score then sample index
        order = np.lexsort((np.arange(n), -scores[:, c]))
        hits = positives[order]
        ranks = np.flatnonzero(hits) + 1
        precision_at_hits = np.cumsum(hits)[hits.nonzero()] / ranks
        per_class[c] = float(precision_at_hits.mean())
    valid = ~np.isnan(per_class)
    if not valid.any():
        raise InvalidConfig("no class has positive samples")
    if not valid.all():
        warnings.warn(
            f"classes without positives excluded from mAP: {np.flatnonzero(~valid).tolist()}",
            NoPositives,
        )
    return float(per_class[valid].mean()), per_class


def evaluate_model(model: SfmModel, test: LabeledDataset) -> EvalReport:
    """Score a trained model on a labeled test set."""
    _, O, R = predict_sfm_batch(model, test.features)
    accuracy, per_class, confusion = accuracy_metrics(R, test.labels, test.n_classes)
    map_score, per_class_ap = mean_average_precision(O, test.labels)
    return EvalReport(
        accuracy=accuracy,
        per_class_accuracy=per_class,
        confusion=confusion,
        map_score=map_score,
        per_class_ap=per_class_ap,
        n_test=test.n,
    )


# -- three-arm comparison -----------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Per-seed metrics for baseline vs subdivision vs random grouping."""

    records: tuple[dict, ...]
    seeds: tuple[int, ...]
    config: dict

    def mean(self, key: str) -> float:
        return float(np.mean([r[key] for r in self.records]))

    def std(self, key: str) -> float:
        return float(np.std([r[key] for r in self.records]))

    def to_dict(self) -> dict:
        keys = ["baseline_acc", "sfm_acc", "random_sfm_acc", "baseline_map", "sfm_map"]
        return {
            "seeds": list(self.seeds),
            "config": self.config,
            "records": list(self.records),
            "aggregate": {k: {"mean": self.mean(k), "std": self.std(k)} for k in keys},
        }


def _split_hash(test: LabeledDataset) -> str:
    digest = hashlib.sha256(",".join(test.sample_ids).encode()).hexdigest()
    return digest[:16]


def compare_experiment(
    gen_config: Figure1Config | None,
    pipeline: SfmConfig,
    seeds,
    test_fraction: float = 0.2,
    dataset: LabeledDataset | None = None,
) -> ComparisonReport:
    """Run the baseline / subdivided / randomly-grouped comparison.

    For each seed: regenerate the synthetic scene with that seed (or re-split
    the fixed ``dataset`` when one is supplied), and train all three arms on
    the identical train/test partition. The baseline is the same pipeline
    with every class kept whole.
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise InvalidConfig("need at least one seed")
    if (gen_config is None) == (dataset is None):
        raise InvalidConfig("provide exactly one of gen_config or dataset")
    records = []
    for seed in seeds:
        if dataset is not None:
            ds = dataset
        else:
            ds, _ = gen_figure1(replace(gen_config, seed=seed))
        train, test = split_stratified(ds, SplitSpec(test_fraction, seed=seed))
        arm_cfg = replace(pipeline, seed=seed)
        K = (
            arm_cfg.k_values
            if arm_cfg.k_source == "manual"
            else None
        )
        sfm = train_sfm(train, arm_cfg)
        ones = replace(arm_cfg, k_source="manual", k_values=(1,) * ds.n_classes)
        baseline = train_sfm(train, ones)
        random_cfg = replace(
            arm_cfg,
            mode="random",
            k_source="manual",
            k_values=K if K is not None else sfm.sub_map.K,
        )
        random_sfm = train_sfm(train, random_cfg)

        sfm_report = evaluate_model(sfm, test)
        base_report = evaluate_model(baseline, test)
        random_report = evaluate_model(random_sfm, test)
        records.append(
            {
                "seed": seed,
                "split_hash": _split_hash(test),
                "baseline_acc": base_report.accuracy,
                "sfm_acc": sfm_report.accuracy,
                "random_sfm_acc": random_report.accuracy,
                "baseline_map": base_report.map_score,
                "sfm_map": sfm_report.map_score,
                "random_sfm_map": random_report.map_score,
            }
        )
    generator_echo = (
        {"fixed_dataset_n": dataset.n}
        if dataset is not None
        else {
            "n_per_class": gen_config.n_per_class,
            "dim": gen_config.dim,
            "mode_separation": gen_config.mode_separation,
            "overlap": gen_config.overlap,
            "noise_sigma": gen_config.noise_sigma,
        }
    )
    return ComparisonReport(
        records=tuple(records),
        seeds=seeds,
        config={
            "generator": generator_echo,
            "pipeline": pipeline.to_dict(),
            "test_fraction": test_fraction,
        },
    )
