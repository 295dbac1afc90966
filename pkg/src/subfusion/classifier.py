"""Multinomial softmax classifier, the fixed fusion layer, and the
end-to-end subdivide-retrain-fuse model.

Training is deliberately boring: full-batch gradient descent from zero
initialization. That makes training a pure function of (features, labels,
hyperparameters), which in turn makes the no-subdivision model *bit-identical*
to a plain classifier trained on the original labels — the key sanity anchor
for everything built on top.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import (
    FeatureExtractor,
    LabeledDataset,
    atomic_write_text,
    fit_extractor,
)
from .errors import (
    DimensionMismatch,
    EmptyClass,
    InvalidConfig,
    MissingEmbedding,
    NonFinite,
)
from .ssc import DEFAULT_LAMBDA_REL
from .subdivision import (
    FusionMatrix,
    SubdivisionMap,
    build_fusion_matrix,
    ratio_rule_k,
    subdivide,
    suggest_k,
)
from .tsne import EmbeddingResult

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SoftmaxHyper:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-4
    seed: int = 0  # reserved; zero-init training is deterministic without it

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 0 or self.l2 < 0:
            raise InvalidConfig(f"invalid hyperparameters: {self}")


@dataclass(frozen=True)
class SoftmaxModel:
    """Linear softmax classifier over M categories."""

    weights: np.ndarray  # (M, d)
    bias: np.ndarray  # (M,)
    l2: float
    training_log: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=np.float64))
        object.__setattr__(self, "training_log", np.asarray(self.training_log, dtype=np.float64))

    @property
    def n_categories(self) -> int:
        return self.weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class FusedPrediction:
    """Fine-grained confidences V, per-class sums O, and the decision R."""

    V: np.ndarray
    O: np.ndarray
    R: int


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    labels: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus (l2/2)*||weights||_F^2 and its gradients.

    The bias is not regularized.
    """
    n = X.shape[0]
    logits = X @ weights.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_z[:, None]
    loss = -float(log_probs[np.arange(n), labels].mean()) + 0.5 * l2 * float(
        np.sum(weights * weights)
    )
    probs = np.exp(log_probs)
    diff = probs
    diff[np.arange(n), labels] -= 1.0
    grad_w = (diff.T @ X) / n + l2 * weights
    grad_b = diff.mean(axis=0)
    return loss, grad_w, grad_b


def train_softmax(
    X: np.ndarray,
    labels: np.ndarray,
    hyper: SoftmaxHyper,
    init_weights: np.ndarray | None = None,
    init_bias: np.ndarray | None = None,
) -> SoftmaxModel:
    """Fit by full-batch gradient descent, from zero weights by default.

    Every category index in [0, max+1) must occur at least once. The loss is
    recorded at the start of each epoch (before that epoch's step).
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or labels.shape != (X.shape[0],):
        raise DimensionMismatch(f"bad shapes: X {X.shape}, labels {labels.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFinite("training features contain NaN or inf")
    if labels.min() < 0:
        raise InvalidConfig("labels must be nonnegative")
    m = int(labels.max()) + 1
    present = np.bincount(labels, minlength=m)
    if (present == 0).any():
        raise EmptyClass(f"categories with no samples: {np.flatnonzero(present == 0).tolist()}")

    weights = np.zeros((m, X.shape[1])) if init_weights is None else init_weights.copy()
    bias = np.zeros(m) if init_bias is None else init_bias.copy()
    if weights.shape != (m, X.shape[1]) or bias.shape != (m,):
        raise DimensionMismatch("warm-start parameters do not match the problem size")
    log = np.empty(hyper.epochs)
    for epoch in range(hyper.epochs):
        loss, grad_w, grad_b = softmax_loss_and_grad(weights, bias, X, labels, hyper.l2)
        if not np.isfinite(loss):
            raise NonFinite(f"training diverged at epoch {epoch}")
        log[epoch] = loss
        weights = weights - hyper.learning_rate * grad_w
        bias = bias - hyper.learning_rate * grad_b
    return SoftmaxModel(weights=weights, bias=bias, l2=hyper.l2, training_log=log)


def predict_sub(model: SoftmaxModel, x: np.ndarray) -> np.ndarray:
    """Category confidences for one sample (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise DimensionMismatch(f"model expects d={model.input_dim}, got {x.shape[-1]}")
    return softmax_probs(x @ model.weights.T + model.bias)


def fuse_predict(V: np.ndarray, fusion: FusionMatrix) -> FusedPrediction:
    """Sum fine-grained confidences into per-class scores and pick the argmax.

    Ties go to the lowest class index.
    """
    V = np.asarray(V, dtype=np.float64)
    W = fusion.W
    if V.shape != (W.shape[1],):
        raise DimensionMismatch(f"V has length {V.shape}, fusion expects {W.shape[1]}")
    O = W @ V
    return FusedPrediction(V=V, O=O, R=int(np.argmax(O)))


# -- end-to-end model --------------------------------------------------------

K_SOURCES = ("manual", "ratio", "suggest")


@dataclass(frozen=True)
class SfmConfig:
    """Everything that determines a subdivide-retrain-fuse training run."""

    k_source: str = "manual"
    k_values: tuple[int, ...] | None = None  # manual source
    t: float | None = None  # ratio source; None = minority count
    k_max: int = 8  # suggest source
    mode: str = "ssc_full_dim"
    lambda_rel: float = DEFAULT_LAMBDA_REL
    extractor: str = "standardize"
    pca_dim: int | None = None
    hyper: SoftmaxHyper = field(default_factory=SoftmaxHyper)
    min_sub_size: int = 2
    warm_start: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.k_source not in K_SOURCES:
            raise InvalidConfig(f"unknown k_source {self.k_source!r}")
        if self.k_source == "manual" and self.k_values is None:
            raise InvalidConfig("manual k_source requires k_values")
        if self.k_values is not None:
            object.__setattr__(self, "k_values", tuple(int(v) for v in self.k_values))

    def to_dict(self) -> dict:
        return {
            "k_source": self.k_source,
            "k_values": None if self.k_values is None else list(self.k_values),
            "t": self.t,
            "k_max": self.k_max,
            "mode": self.mode,
            "lambda_rel": self.lambda_rel,
            "extractor": self.extractor,
            "pca_dim": self.pca_dim,
            "hyper": {
                "learning_rate": self.hyper.learning_rate,
                "epochs": self.hyper.epochs,
                "l2": self.hyper.l2,
                "seed": self.hyper.seed,
            },
            "min_sub_size": self.min_sub_size,
            "warm_start": self.warm_start,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(doc: dict) -> "SfmConfig":
        hyper = doc.get("hyper", {})
        return SfmConfig(
            k_source=doc.get("k_source", "manual"),
            k_values=None if doc.get("k_values") is None else tuple(doc["k_values"]),
            t=doc.get("t"),
            k_max=doc.get("k_max", 8),
            mode=doc.get("mode", "ssc_full_dim"),
            lambda_rel=doc.get("lambda_rel", DEFAULT_LAMBDA_REL),
            extractor=doc.get("extractor", "standardize"),
            pca_dim=doc.get("pca_dim"),
            hyper=SoftmaxHyper(
                learning_rate=hyper.get("learning_rate", 0.5),
                epochs=hyper.get("epochs", 300),
                l2=hyper.get("l2", 1e-4),
                seed=hyper.get("seed", 0),
            ),
            min_sub_size=doc.get("min_sub_size", 2),
            warm_start=doc.get("warm_start", False),
            seed=doc.get("seed", 0),
        )


@dataclass(frozen=True)
class SfmModel:
    """Trained pipeline: extractor, subdivision map, fusion weights, classifier."""

    extractor: FeatureExtractor
    sub_map: SubdivisionMap
    fusion: FusionMatrix
    classifier: SoftmaxModel
    class_names: tuple[str, ...]
    config: SfmConfig

    def __post_init__(self):
        if self.classifier.n_categories != self.sub_map.M:
            raise DimensionMismatch("classifier output does not match subcategory count")
        if self.fusion.W.shape != (self.sub_map.n_classes, self.sub_map.M):
            raise DimensionMismatch("fusion matrix shape inconsistent with subdivision map")


def resolve_k(
    train: LabeledDataset,
    config: SfmConfig,
    embedding: EmbeddingResult | np.ndarray | None = None,
) -> tuple[int, ...]:
    """Turn the configured K source into concrete per-class cluster counts."""
    if config.k_source == "manual":
        if len(config.k_values) != train.n_classes:
            raise InvalidConfig(
                f"k_values has {len(config.k_values)} entries for {train.n_classes} classes"
            )
        return config.k_values
    if config.k_source == "ratio":
        return ratio_rule_k(train.class_counts(), config.t)
    if embedding is None:
        raise MissingEmbedding("suggest k_source requires an embedding")
    return suggest_k(
        embedding, train, config.k_max, lambda_rel=config.lambda_rel, seed=config.seed
    )


def train_sfm(
    train: LabeledDataset,
    config: SfmConfig,
    embedding: EmbeddingResult | np.ndarray | None = None,
    sub_map: SubdivisionMap | None = None,
) -> SfmModel:
    """Fit the full pipeline on a training dataset.

    Passing a precomputed ``sub_map`` (e.g. from the ``subdivide`` command)
    skips K resolution and clustering. By default the classifier trains from
    scratch on the fine-grained labels; with ``warm_start`` each subcategory
    starts from the weights of a coarse model's owning class.
    """
    train.require_all_classes()
    extractor = fit_extractor(train, config.extractor, config.pca_dim)
    transformed = train.with_features(extractor.transform(train.features))
    if sub_map is None:
        K = resolve_k(transformed, config, embedding)
        sub_map = subdivide(
            transformed,
            K,
            mode=config.mode,
            embedding=embedding,
            seed=config.seed,
            lambda_rel=config.lambda_rel,
            min_sub_size=config.min_sub_size,
        )
    else:
        sub_map.validate_against(train.labels)
    fusion = build_fusion_matrix(sub_map)
    init_w = init_b = None
    if config.warm_start:
        coarse = train_softmax(transformed.features, transformed.labels, config.hyper)
        init_w = coarse.weights[sub_map.owner]
        init_b = coarse.bias[sub_map.owner]
    classifier = train_softmax(
        transformed.features, sub_map.sub_labels, config.hyper, init_w, init_b
    )
    return SfmModel(
        extractor=extractor,
        sub_map=sub_map,
        fusion=fusion,
        classifier=classifier,
        class_names=train.class_names,
        config=config,
    )


def predict_sfm(model: SfmModel, x: np.ndarray) -> FusedPrediction:
    """Extract features, score subcategories, and fuse for one sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("predict_sfm takes a single d-vector; use predict_sfm_batch")
    V = predict_sub(model.classifier, model.extractor.transform(x))
    return fuse_predict(V, model.fusion)


def predict_sfm_batch(model: SfmModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized prediction: returns (V (n,M), O (n,L), R (n,))."""
    X = np.asarray(X, dtype=np.float64)
    V = predict_sub(model.classifier, model.extractor.transform(X))
    O = V @ model.fusion.W.T
    R = np.argmax(O, axis=1).astype(np.int64)
    return V, O, R


# -- persistence -------------------------------------------------------------

def model_to_dict(model: SfmModel) -> dict:
    return {
        "schema": MODEL_SCHEMA_VERSION,
        "class_names": list(model.class_names),
        "extractor": model.extractor.to_dict(),
        "subdivision": model.sub_map.to_dict(),
        "fusion": model.fusion.W.tolist(),
        "weights": model.classifier.weights.tolist(),
        "bias": model.classifier.bias.tolist(),
        "l2": model.classifier.l2,
        "training_log": model.classifier.training_log.tolist(),
        "config": model.config.to_dict(),
    }


def save_model(model: SfmModel, path: str) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model)))


def load_model(path: str) -> SfmModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA_VERSION:
        raise InvalidConfig(f"unsupported model schema {doc.get('schema')!r}")
    classifier = SoftmaxModel(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        bias=np.asarray(doc["bias"], dtype=np.float64),
        l2=float(doc["l2"]),
        training_log=np.asarray(doc["training_log"], dtype=np.float64),
    )
    return SfmModel(
        extractor=FeatureExtractor.from_dict(doc["extractor"]),
        sub_map=SubdivisionMap.from_dict(doc["subdivision"]),
        fusion=FusionMatrix(W=np.asarray(doc["fusion"], dtype=np.float64)),
        classifier=classifier,
        class_names=tuple(doc["class_names"]),
        config=SfmConfig.from_dict(doc["config"]),
    )
