"""Subdivision-fusion classification toolkit.

Splits each class into clustered subcategories, retrains a softmax on the
fine-grained labels, and folds subcategory confidences back into the original
classes through a fixed binary fusion layer. Includes the supporting
pipeline: sparse-representation clustering, an exact 2-D embedding for
eyeballing per-class structure, synthetic benchmarks, an evaluation harness,
a CLI, and an interactive tuning service.
"""

from .data import (
    FeatureExtractor,
    LabeledDataset,
    SplitSpec,
    fit_apply_extractor,
    load_dataset,
    save_dataset,
    split_stratified,
)
from .synth import Figure1Config, SubspaceConfig, gen_figure1, gen_imbalanced, gen_subspaces
from .ssc import (
    AffinityMatrix,
    SelfRepresentation,
    build_affinity,
    random_partition,
    self_representation,
    silhouette_score,
    spectral_cluster,
    ssc,
)
from .tsne import EmbeddingResult, kl_divergence, tsne
from .subdivision import (
    FusionMatrix,
    SubdivisionMap,
    build_fusion_matrix,
    ratio_rule_k,
    subdivide,
    suggest_k,
)
from .classifier import (
    FusedPrediction,
    SfmConfig,
    SfmModel,
    SoftmaxHyper,
    SoftmaxModel,
    fuse_predict,
    load_model,
    predict_sfm,
    predict_sfm_batch,
    predict_sub,
    save_model,
    train_sfm,
    train_softmax,
)
from .evaluate import (
    ComparisonReport,
    EvalReport,
    accuracy_metrics,
    compare_experiment,
    evaluate_model,
    mean_average_precision,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "ComparisonReport",
    "EmbeddingResult",
    "EvalReport",
    "FeatureExtractor",
    "Figure1Config",
    "FusedPrediction",
    "FusionMatrix",
    "LabeledDataset",
    "SelfRepresentation",
    "SfmConfig",
    "SfmModel",
    "SoftmaxHyper",
    "SoftmaxModel",
    "SplitSpec",
    "SubdivisionMap",
    "SubspaceConfig",
    "accuracy_metrics",
    "build_affinity",
    "build_fusion_matrix",
    "compare_experiment",
    "evaluate_model",
    "fit_apply_extractor",
    "fuse_predict",
    "gen_figure1",
    "gen_imbalanced",
    "gen_subspaces",
    "kl_divergence",
    "load_dataset",
    "load_model",
    "mean_average_precision",
    "predict_sfm",
    "predict_sfm_batch",
    "predict_sub",
    "random_partition",
    "ratio_rule_k",
    "save_dataset",
    "save_model",
    "self_representation",
    "silhouette_score",
    "spectral_cluster",
    "split_stratified",
    "ssc",
    "subdivide",
    "suggest_k",
    "train_sfm",
    "train_softmax",
    "tsne",
]
