"""Dataset container, file I/O, stratified splitting, and feature preprocessing.

A :class:`LabeledDataset` is the currency passed between every stage of the
pipeline: an (n, d) float64 feature matrix plus integer class labels in
[0, L). Two on-disk formats are supported:

* CSV: header row with optional leading ``id`` column, feature columns
  ``f0..f{d-1}``, a ``label`` column, and an optional trailing ``mode``
  metadata column (ignored on load).
* JSON: object with ``features`` (array of arrays), ``labels`` (array of
  strings or integers), optional ``ids`` and ``class_names``.

String labels are mapped to dense integer indices in first-appearance order.
Integer labels are taken as the indices themselves and must already be dense.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    ClassTooSmall,
    DimensionMismatch,
    EmptyDataset,
    InvalidConfig,
    MalformedFile,
    SingleClass,
)

_FEATURE_COL = re.compile(r"^f(\d+)$")


def atomic_write_text(path: str, text: str) -> None:
    """Write text to ``path`` via a temp file and rename, so readers never
    observe a partially written file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable feature matrix with integer class labels.

    Attributes:
        features: (n, d) float64 matrix, all entries finite.
        labels: (n,) integer array with values in [0, L).
        class_names: L display names, index-aligned with label values.
        sample_ids: n stable string identifiers.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        feats = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise EmptyDataset(f"feature matrix must be (n>=1, d>=1), got {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise MalformedFile("features contain NaN or infinite entries")
        if labels.shape != (feats.shape[0],):
            raise DimensionMismatch("labels length does not match number of samples")
        if len(self.class_names) < 2:
            raise SingleClass(f"need at least 2 classes, got {len(self.class_names)}")
        if labels.min() < 0 or labels.max() >= len(self.class_names):
            raise MalformedFile("label values outside [0, L)")
        if len(self.sample_ids) != feats.shape[0]:
            raise DimensionMismatch("sample_ids length does not match number of samples")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            features=self.features[idx],
            labels=self.labels[idx],
            class_names=self.class_names,
            sample_ids=tuple(self.sample_ids[i] for i in idx),
        )

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(features, self.labels, self.class_names, self.sample_ids)

    def require_all_classes(self) -> None:
        """Raise unless every class index in [0, L) has at least one sample
        (the precondition for training datasets)."""
        counts = self.class_counts()
        missing = np.flatnonzero(counts == 0)
        if missing.size:
            raise EmptyDataset(f"classes with no samples: {missing.tolist()}")


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split parameters; the split is a pure function of these."""

    test_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not (0.0 < self.test_fraction < 1.0):
            raise InvalidConfig(f"test_fraction must be in (0,1), got {self.test_fraction}")


def default_ids(n: int) -> tuple[str, ...]:
    width = max(4, len(str(n - 1)))
    return tuple(f"s{i:0{width}d}" for i in range(n))


# -- loading ---------------------------------------------------------------

def _labels_from_strings(raw: list[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    index: dict[str, int] = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, name in enumerate(raw):
        if name not in index:
            index[name] = len(index)
        out[i] = index[name]
    return out, tuple(index.keys())


def _parse_feature_cell(cell: str, row_no: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise MalformedFile(f"non-numeric feature cell {cell!r} in data row {row_no}") from None
    if not np.isfinite(value):
        raise MalformedFile(f"non-finite feature value {cell!r} in data row {row_no}")
    return value


def _load_csv(path: str) -> LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataset(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    cols = {name: i for i, name in enumerate(header)}
    if len(cols) != len(header):
        raise MalformedFile("duplicate column names in header")
    if "label" not in cols:
        raise MalformedFile('CSV header must contain a "label" column')
    feature_idx = sorted(
        ((int(m.group(1)), i) for name, i in cols.items() if (m := _FEATURE_COL.match(name))),
    )
    if not feature_idx:
        raise MalformedFile("CSV header has no feature columns f0..f{d-1}")
    if [k for k, _ in feature_idx] != list(range(len(feature_idx))):
        raise MalformedFile("feature columns must be contiguous f0..f{d-1}")
    known = {"label", "id", "mode"} | {f"f{k}" for k, _ in feature_idx}
    unknown = [name for name in cols if name not in known]
    if unknown:
        raise MalformedFile(f"unknown CSV columns: {unknown}")

    data_rows = [r for r in rows[1:] if r and any(cell.strip() for cell in r)]
    if not data_rows:
        raise EmptyDataset(f"{path} has a header but no data rows")
    n, d = len(data_rows), len(feature_idx)
    feats = np.empty((n, d), dtype=np.float64)
    raw_labels: list[str] = []
    ids: list[str] = []
    for r, row in enumerate(data_rows):
        if len(row) != len(header):
            raise MalformedFile(f"row {r + 1} has {len(row)} cells, header has {len(header)}")
        for j, (_, col) in enumerate(feature_idx):
            feats[r, j] = _parse_feature_cell(row[col], r + 1)
        raw_labels.append(row[cols["label"]].strip())
        ids.append(row[cols["id"]].strip() if "id" in cols else "")
    labels, class_names = _labels_from_strings(raw_labels)
    if len(class_names) < 2:
        raise SingleClass(f"label column has a single distinct value {class_names}")
    sample_ids = tuple(ids) if "id" in cols else default_ids(n)
    return LabeledDataset(feats, labels, class_names, sample_ids)


def _load_json(path: str) -> LabeledDataset:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise MalformedFile("JSON dataset must be an object")
    unknown = set(doc) - {"features", "labels", "ids", "class_names"}
    if unknown:
        raise MalformedFile(f"unknown JSON keys: {sorted(unknown)}")
    if "features" not in doc or "labels" not in doc:
        raise MalformedFile('JSON dataset needs "features" and "labels"')
    raw_feats = doc["features"]
    if not raw_feats:
        raise EmptyDataset(f"{path} has no samples")
    widths = {len(row) for row in raw_feats}
    if len(widths) != 1:
        raise MalformedFile(f"feature rows have inconsistent lengths {sorted(widths)}")
    try:
        feats = np.asarray(raw_feats, dtype=np.float64)
    except (TypeError, ValueError):
        raise MalformedFile("non-numeric feature entry") from None
    if not np.all(np.isfinite(feats)):
        raise MalformedFile("features contain NaN or infinite entries")

    raw_labels = doc["labels"]
    if len(raw_labels) != feats.shape[0]:
        raise MalformedFile("labels length does not match features")
    if all(isinstance(v, str) for v in raw_labels):
        labels, class_names = _labels_from_strings(raw_labels)
        if "class_names" in doc:
            raise MalformedFile("class_names only allowed with integer labels")
    elif all(isinstance(v, int) and not isinstance(v, bool) for v in raw_labels):
        labels = np.asarray(raw_labels, dtype=np.int64)
        if labels.min() < 0:
            raise MalformedFile("integer labels must be >= 0")
        n_classes = int(labels.max()) + 1
        if set(np.unique(labels)) != set(range(n_classes)):
            raise MalformedFile("integer labels must form a dense range 0..L-1")
        names = doc.get("class_names", [str(i) for i in range(n_classes)])
        if len(names) != n_classes:
            raise MalformedFile("class_names length does not match label range")
        class_names = tuple(str(v) for v in names)
    else:
        raise MalformedFile("labels must be all strings or all integers")
    if len(class_names) < 2:
        raise SingleClass("labels contain a single distinct value")
    ids = doc.get("ids")
    if ids is not None and len(ids) != feats.shape[0]:
        raise MalformedFile("ids length does not match features")
    sample_ids = tuple(str(v) for v in ids) if ids is not None else default_ids(feats.shape[0])
    return LabeledDataset(feats, labels, class_names, sample_ids)


def _infer_format(path: str, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise InvalidConfig(f"unknown dataset format {fmt!r}")
        return fmt
    ext = os.path.splitext(path)[1].lower()
    return "json" if ext == ".json" else "csv"


def load_dataset(path: str, fmt: str | None = None) -> LabeledDataset:
    """Load a dataset from CSV or JSON (inferred from the extension when
    ``fmt`` is None)."""
    if not os.path.exists(path):
        raise MalformedFile(f"no such file: {path}")
    return _load_json(path) if _infer_format(path, fmt) == "json" else _load_csv(path)


def load_features(path: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Load only the feature matrix (plus ids) from a dataset file; the label
    column is optional and ignored. Used by commands that score or embed
    unlabeled data."""
    if not os.path.exists(path):
        raise MalformedFile(f"no such file: {path}")
    if _infer_format(path, None) == "json":
        with open(path) as fh:
            doc = json.load(fh)
        feats = np.asarray(doc["features"], dtype=np.float64)
        ids = doc.get("ids")
        sample_ids = tuple(str(v) for v in ids) if ids else default_ids(feats.shape[0])
        if not np.all(np.isfinite(feats)):
            raise MalformedFile("features contain NaN or infinite entries")
        return feats, sample_ids
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataset(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    cols = {name: i for i, name in enumerate(header)}
    feature_idx = sorted(
        ((int(m.group(1)), i) for name, i in cols.items() if (m := _FEATURE_COL.match(name))),
    )
    if not feature_idx:
        raise MalformedFile("CSV header has no feature columns f0..f{d-1}")
    data_rows = [r for r in rows[1:] if r and any(cell.strip() for cell in r)]
    if not data_rows:
        raise EmptyDataset(f"{path} has a header but no data rows")
    feats = np.empty((len(data_rows), len(feature_idx)), dtype=np.float64)
    ids = []
    for r, row in enumerate(data_rows):
        for j, (_, col) in enumerate(feature_idx):
            feats[r, j] = _parse_feature_cell(row[col], r + 1)
        ids.append(row[cols["id"]].strip() if "id" in cols else "")
    sample_ids = tuple(ids) if "id" in cols else default_ids(len(data_rows))
    return feats, sample_ids


# -- saving ----------------------------------------------------------------

def save_dataset(
    ds: LabeledDataset,
    path: str,
    fmt: str | None = None,
    extra_columns: dict[str, np.ndarray] | None = None,
) -> None:
    """Write a dataset to disk atomically.

    JSON uses integer labels plus an explicit ``class_names`` list, so any
    dataset round-trips exactly. CSV writes class-name strings; it reloads
    with identical integer labels whenever the labels are already in
    first-appearance order (true for everything this package generates).
    ``extra_columns`` (CSV only) appends metadata columns such as ``mode``.
    """
    fmt = _infer_format(path, fmt)
    if fmt == "json":
        doc = {
            "features": [[float(v) for v in row] for row in ds.features],
            "labels": [int(v) for v in ds.labels],
            "ids": list(ds.sample_ids),
            "class_names": list(ds.class_names),
        }
        atomic_write_text(path, json.dumps(doc))
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    extra = extra_columns or {}
    header = ["id"] + [f"f{j}" for j in range(ds.d)] + ["label"] + sorted(extra)
    writer.writerow(header)
    for i in range(ds.n):
        row = [ds.sample_ids[i]]
        row += [repr(float(v)) for v in ds.features[i]]
        row.append(ds.class_names[ds.labels[i]])
        row += [str(extra[name][i]) for name in sorted(extra)]
        writer.writerow(row)
    atomic_write_text(path, buf.getvalue())


# -- splitting -------------------------------------------------------------

def split_indices(
    labels: np.ndarray, n_classes: int, spec: SplitSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (train, test) for a split, deterministic given the seed.

    Stratified mode draws per-class test counts within +-1 of
    ``test_fraction * n_i`` while always leaving at least one training
    sample per class. Indices come back in ascending order.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    counts = np.bincount(labels, minlength=n_classes)
    too_small = np.flatnonzero(counts < 2)
    if too_small.size:
        raise ClassTooSmall(
            f"classes {too_small.tolist()} have fewer than 2 samples and cannot be split"
        )
    rng = np.random.default_rng(spec.seed)
    test_mask = np.zeros(n, dtype=bool)
    if spec.stratified:
        for c in range(n_classes):
            idx = np.flatnonzero(labels == c)
            n_test = int(round(spec.test_fraction * idx.size))
            n_test = min(max(n_test, 0), idx.size - 1)
            chosen = rng.permutation(idx)[:n_test]
            test_mask[chosen] = True
    else:
        n_test = min(max(int(round(spec.test_fraction * n)), 1), n - 1)
        chosen = rng.permutation(n)[:n_test]
        test_mask[chosen] = True
    test_idx = np.flatnonzero(test_mask)
    if test_idx.size == 0:
        raise ClassTooSmall("split produced an empty test set; increase test_fraction")
    return np.flatnonzero(~test_mask), test_idx


def split_stratified(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Partition into (train, test) datasets; see :func:`split_indices`."""
    train_idx, test_idx = split_indices(ds.labels, ds.n_classes, spec)
    return ds.subset(train_idx), ds.subset(test_idx)


# -- feature extraction ----------------------------------------------------

EXTRACTOR_KINDS = ("identity", "standardize", "pca")


@dataclass(frozen=True)
class FeatureExtractor:
    """A feature transformation fitted on training data only.

    ``standardize`` centers each column and scales unit variance columns;
    zero-variance columns are centered but not divided. ``pca`` projects onto
    the top ``target_dim`` principal directions of the training data.
    """

    kind: str
    input_dim: int
    target_dim: int | None = None
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    components: np.ndarray | None = None

    @property
    def output_dim(self) -> int:
        if self.kind == "pca":
            return int(self.target_dim)
        return self.input_dim

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[None, :]
        if X.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"extractor fitted on d={self.input_dim}, input has d={X.shape[1]}"
            )
        if self.kind == "identity":
            out = X.copy()
        elif self.kind == "standardize":
            out = (X - self.mean) / self.scale
        else:
            out = (X - self.mean) @ self.components.T
        return out[0] if squeeze else out

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "input_dim": self.input_dim, "target_dim": self.target_dim}
        for name in ("mean", "scale", "components"):
            arr = getattr(self, name)
            doc[name] = None if arr is None else np.asarray(arr).tolist()
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "FeatureExtractor":
        def arr(name):
            return None if doc.get(name) is None else np.asarray(doc[name], dtype=np.float64)

        return FeatureExtractor(
            kind=doc["kind"],
            input_dim=int(doc["input_dim"]),
            target_dim=None if doc.get("target_dim") is None else int(doc["target_dim"]),
            mean=arr("mean"),
            scale=arr("scale"),
            components=arr("components"),
        )


def fit_extractor(ds_train: LabeledDataset, kind: str, target_dim: int | None = None) -> FeatureExtractor:
    """Fit an extractor on training features only."""
    if kind not in EXTRACTOR_KINDS:
        raise InvalidConfig(f"unknown extractor kind {kind!r}")
    X = ds_train.features
    if kind == "identity":
        return FeatureExtractor(kind="identity", input_dim=ds_train.d)
    mean = X.mean(axis=0)
    if kind == "standardize":
        std = X.std(axis=0)
        scale = np.where(std > 0.0, std, 1.0)  # zero-variance columns: center only
        return FeatureExtractor(kind="standardize", input_dim=ds_train.d, mean=mean, scale=scale)
    if target_dim is None or not (1 <= target_dim <= ds_train.d):
        raise InvalidConfig(f"pca target_dim must be in [1, d], got {target_dim}")
    centered = X - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:target_dim]
    # Fix the sign convention so the fit is reproducible across platforms.
    signs = np.sign(components[np.arange(target_dim), np.abs(components).argmax(axis=1)])
    signs[signs == 0.0] = 1.0
    components = components * signs[:, None]
    return FeatureExtractor(
        kind="pca", input_dim=ds_train.d, target_dim=target_dim, mean=mean, components=components
    )


def fit_apply_extractor(
    ds_train: LabeledDataset,
    ds_other: LabeledDataset,
    kind: str,
    target_dim: int | None = None,
) -> tuple[LabeledDataset, LabeledDataset, FeatureExtractor]:
    """Fit on the training set and transform both datasets with the same
    parameters. The extractor never sees ``ds_other`` during fitting."""
    if ds_other.d != ds_train.d:
        raise DimensionMismatch(f"train has d={ds_train.d}, other has d={ds_other.d}")
    extractor = fit_extractor(ds_train, kind, target_dim)
    return (
        ds_train.with_features(extractor.transform(ds_train.features)),
        ds_other.with_features(extractor.transform(ds_other.features)),
        extractor,
    )
