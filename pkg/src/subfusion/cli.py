"""Command-line entry point.

Subcommands hand files to each other along the pipeline:
``generate`` -> dataset CSV/JSON, ``embed`` -> 2-D coordinates CSV,
``subdivide`` -> subdivision JSON, ``train`` -> model JSON, ``predict``/
``eval``/``compare`` -> prediction CSV / report JSON. ``serve`` starts the
interactive tuning service. All outputs are written atomically.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .classifier import (
    SfmConfig,
    SoftmaxHyper,
    load_model,
    predict_sfm_batch,
    save_model,
    train_sfm,
)
from .data import (
    atomic_write_text,
    load_dataset,
    load_features,
    save_dataset,
)
from .errors import (
    DataError,
    NumericalError,
    SubfusionError,
    UsageError,
)
from .evaluate import compare_experiment, evaluate_model
from .ssc import DEFAULT_LAMBDA_REL, random_partition, ssc
from .subdivision import SubdivisionMap, subdivide
from .synth import Figure1Config, SubspaceConfig, gen_figure1, gen_imbalanced, gen_subspaces
from .tsne import tsne

_CONFIG_SCHEMA = {
    "dataset": {"path", "format"},
    "generator": {
        "kind",
        "n_per_class",
        "dim",
        "mode_separation",
        "overlap",
        "noise_sigma",
        "counts",
        "ambient_dim",
        "subspace_dims",
        "n_per_subspace",
    },
    "k_source": {"kind", "k", "t", "k_max"},
    "clustering": {"mode", "lambda_rel"},
    "tsne": {"perplexity", "iters"},
    "classifier": {"learning_rate", "epochs", "l2"},
    "split": {"test_fraction"},
    "seeds": None,
    "out_dir": None,
}

_MODE_ALIASES = {
    "full": "ssc_full_dim",
    "2d": "ssc_2d",
    "random": "random",
    "ssc_full_dim": "ssc_full_dim",
    "ssc_2d": "ssc_2d",
}


def load_pipeline_config(path: str) -> dict:
    """Load and validate the structured configuration file (JSON).

    Unknown keys are rejected outright; seeds must be explicit integers.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    for key, value in doc.items():
        if key not in _CONFIG_SCHEMA:
            raise UsageError(f"unknown config key {key!r}")
        allowed = _CONFIG_SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, dict):
                raise UsageError(f"config key {key!r} must be an object")
            bad = set(value) - allowed
            if bad:
                raise UsageError(f"unknown keys under {key!r}: {sorted(bad)}")
    if "seeds" in doc:
        if not isinstance(doc["seeds"], list) or not all(
            isinstance(s, int) for s in doc["seeds"]
        ):
            raise UsageError("config 'seeds' must be a list of integers")
    return doc


def parse_k_spec(spec: str, n_classes: int) -> tuple[int, ...] | str:
    """Parse a --k value: 'auto-ratio', 'auto-suggest', '1,1,2,2', or
    'c0=1,c2=2' (unlisted classes default to 1)."""
    spec = spec.strip()
    if spec in ("auto-ratio", "auto-suggest"):
        return spec
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    if not parts:
        raise UsageError("empty --k specification")
    if all("=" in p for p in parts):
        values = [1] * n_classes
        for p in parts:
            name, _, raw = p.partition("=")
            name = name.strip()
            if not (name.startswith("c") and name[1:].isdigit()):
                raise UsageError(f"bad class reference {name!r}; use c<index>=<k>")
            idx = int(name[1:])
            if not (0 <= idx < n_classes):
                raise UsageError(f"class index {idx} out of range [0, {n_classes})")
            values[idx] = int(raw)
        return tuple(values)
    try:
        values = tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad --k specification {spec!r}") from None
    if len(values) != n_classes:
        raise UsageError(f"--k lists {len(values)} values for {n_classes} classes")
    return values


def _write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _load_embedding_coords(path: str) -> np.ndarray:
    coords, _ = load_features(path)
    if coords.shape[1] != 2:
        raise DataError(f"embedding file must have 2 coordinate columns, got {coords.shape[1]}")
    return coords


# -- subcommands -------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.kind == "figure1":
        cfg = Figure1Config(
            n_per_class=args.n,
            dim=args.dim,
            mode_separation=args.mode_separation,
            overlap=args.overlap,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
        ds, modes = gen_figure1(cfg)
        save_dataset(ds, args.out, extra_columns={"mode": modes} if args.out.endswith(".csv") else None)
    elif args.kind == "imbalanced":
        counts = [int(c) for c in args.counts.split(",")]
        ds = gen_imbalanced(counts, dim=args.dim, seed=args.seed)
        save_dataset(ds, args.out)
    else:  # subspaces
        dims = tuple(int(v) for v in args.subspace_dims.split(","))
        cfg = SubspaceConfig(
            ambient_dim=args.ambient_dim,
            subspace_dims=dims,
            n_per_subspace=args.n,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
        X, labels = gen_subspaces(cfg)
        from .data import LabeledDataset, default_ids

        ds = LabeledDataset(
            features=X,
            labels=labels,
            class_names=tuple(f"subspace{i}" for i in range(len(dims))),
            sample_ids=default_ids(X.shape[0]),
        )
        save_dataset(ds, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_embed(args) -> int:
    X, ids = load_features(args.data)
    result = tsne(X, perplexity=args.perplexity, iters=args.iters, seed=args.seed)
    _write_csv(
        args.out,
        ["id", "f0", "f1"],
        [[ids[i], repr(float(result.Y[i, 0])), repr(float(result.Y[i, 1]))] for i in range(len(ids))],
    )
    if args.kl_out:
        _write_csv(
            args.kl_out,
            ["iteration", "kl"],
            [[t + 1, repr(float(v))] for t, v in enumerate(result.kl_history)],
        )
    print(f"wrote {args.out} (final KL {result.kl_history[-1]:.6f})")
    return 0


def cmd_cluster(args) -> int:
    X, ids = load_features(args.data)
    if args.method == "ssc":
        labels = ssc(X.T, args.k, lambda_rel=args.lambda_rel, seed=args.seed)
    else:
        labels = random_partition(X.shape[0], args.k, args.seed)
    _write_csv(args.out, ["id", "cluster"], [[ids[i], int(labels[i])] for i in range(len(ids))])
    print(f"wrote {args.out}")
    return 0


def cmd_subdivide(args) -> int:
    ds = load_dataset(args.data)
    mode = _MODE_ALIASES[args.mode]
    embedding = _load_embedding_coords(args.embedding) if args.embedding else None
    if args.method == "ratio":
        from .subdivision import ratio_rule_k

        K = ratio_rule_k(ds.class_counts(), args.t)
    elif args.method == "suggest":
        from .subdivision import suggest_k

        if embedding is None:
            raise DataError("--method suggest requires --embedding")
        K = suggest_k(embedding, ds, args.k_max, lambda_rel=args.lambda_rel, seed=args.seed)
    else:
        if not args.k:
            raise UsageError("--method manual requires --k")
        K = parse_k_spec(args.k, ds.n_classes)
        if isinstance(K, str):
            raise UsageError("--method manual takes explicit counts, not auto-*")
    sub_map = subdivide(
        ds, K, mode=mode, embedding=embedding, seed=args.seed, lambda_rel=args.lambda_rel
    )
    doc = sub_map.to_dict()
    doc["class_names"] = list(ds.class_names)
    atomic_write_text(args.out, json.dumps(doc))
    print(f"wrote {args.out} (K={list(sub_map.K)}, M={sub_map.M})")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    file_cfg = load_pipeline_config(args.config) if args.config else {}
    cls_cfg = file_cfg.get("classifier", {})
    clu_cfg = file_cfg.get("clustering", {})
    ks_cfg = file_cfg.get("k_source", {})

    def pick(flag_value, cfg_value, default):
        if flag_value is not None:
            return flag_value
        return cfg_value if cfg_value is not None else default

    hyper = SoftmaxHyper(
        learning_rate=pick(args.lr, cls_cfg.get("learning_rate"), 0.5),
        epochs=pick(args.epochs, cls_cfg.get("epochs"), 300),
        l2=pick(args.l2, cls_cfg.get("l2"), 1e-4),
    )
    mode = _MODE_ALIASES[pick(args.mode, clu_cfg.get("mode"), "full")]
    lambda_rel = pick(args.lambda_rel, clu_cfg.get("lambda_rel"), DEFAULT_LAMBDA_REL)
    t = pick(args.t, ks_cfg.get("t"), None)
    k_max = pick(args.k_max, ks_cfg.get("k_max"), 8)
    embedding = _load_embedding_coords(args.embedding) if args.embedding else None
    common = dict(
        mode=mode,
        lambda_rel=lambda_rel,
        extractor=args.extractor,
        pca_dim=args.pca_dim,
        hyper=hyper,
        seed=args.seed,
    )
    sub_map = None
    if args.subdivision:
        with open(args.subdivision) as fh:
            sub_map = SubdivisionMap.from_dict(json.load(fh))
        if sub_map.method in _MODE_ALIASES.values():
            common["mode"] = sub_map.method
        config = SfmConfig(k_source="manual", k_values=sub_map.K, **common)
    else:
        k_flag = args.k
        if k_flag is None and ks_cfg.get("kind") in ("ratio", "suggest"):
            k_flag = f"auto-{ks_cfg['kind']}"
        elif k_flag is None and ks_cfg.get("k") is not None:
            k_flag = ",".join(str(v) for v in ks_cfg["k"])
        k_spec = parse_k_spec(k_flag, ds.n_classes) if k_flag else (1,) * ds.n_classes
        if k_spec == "auto-ratio":
            config = SfmConfig(k_source="ratio", t=t, **common)
        elif k_spec == "auto-suggest":
            config = SfmConfig(k_source="suggest", k_max=k_max, **common)
        else:
            config = SfmConfig(k_source="manual", k_values=k_spec, **common)
    model = train_sfm(ds, config, embedding=embedding, sub_map=sub_map)
    save_model(model, args.out)
    print(f"wrote {args.out} (K={list(model.sub_map.K)}, M={model.sub_map.M})")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, ids = load_features(args.data)
    V, O, R = predict_sfm_batch(model, X)
    m, n_classes = V.shape[1], O.shape[1]
    header = (
        ["id"]
        + [f"v{k}" for k in range(m)]
        + [f"o{i}" for i in range(n_classes)]
        + ["r"]
    )
    rows = [
        [ids[i]]
        + [repr(float(v)) for v in V[i]]
        + [repr(float(o)) for o in O[i]]
        + [int(R[i])]
        for i in range(len(ids))
    ]
    _write_csv(args.out, header, rows)
    print(f"wrote {args.out}")
    return 0


def _report_table(report_dict: dict, class_names) -> str:
    lines = [
        f"accuracy: {report_dict['accuracy']:.4f}    mAP: {report_dict['map']:.4f}    "
        f"n_test: {report_dict['n_test']}",
        f"{'class':<16} {'accuracy':>9} {'AP':>9}",
    ]
    for i, name in enumerate(class_names):
        ap = report_dict["per_class_ap"][i]
        ap_str = "-" if ap is None else f"{ap:9.4f}"
        lines.append(f"{name:<16} {report_dict['per_class_accuracy'][i]:9.4f} {ap_str:>9}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.data)
    report = evaluate_model(model, ds)
    doc = report.to_dict()
    doc["class_names"] = list(ds.class_names)
    atomic_write_text(args.out, json.dumps(doc))
    print(_report_table(doc, ds.class_names))
    print(f"wrote {args.out}")
    return 0


def cmd_compare(args) -> int:
    doc = load_pipeline_config(args.config)
    dataset = None
    gen_cfg = None
    if "dataset" in doc:
        if "path" not in doc["dataset"]:
            raise UsageError("config 'dataset' needs a 'path'")
        dataset = load_dataset(doc["dataset"]["path"], doc["dataset"].get("format"))
    else:
        gen = doc.get("generator", {})
        if gen.get("kind", "figure1") != "figure1":
            raise UsageError("compare supports generator.kind == 'figure1' or a dataset path")
        gen_cfg = Figure1Config(
            n_per_class=gen.get("n_per_class", 200),
            dim=gen.get("dim", 2),
            mode_separation=gen.get("mode_separation", 7.0),
            overlap=gen.get("overlap", 0.5),
            noise_sigma=gen.get("noise_sigma", 0.6),
        )
    k_source = doc.get("k_source", {"kind": "manual", "k": [1, 1, 2, 2]})
    clustering = doc.get("clustering", {})
    cls = doc.get("classifier", {})
    pipeline = SfmConfig(
        k_source=k_source.get("kind", "manual"),
        k_values=tuple(k_source["k"]) if k_source.get("k") is not None else None,
        t=k_source.get("t"),
        k_max=k_source.get("k_max", 8),
        mode=_MODE_ALIASES[clustering.get("mode", "full")],
        lambda_rel=clustering.get("lambda_rel", DEFAULT_LAMBDA_REL),
        hyper=SoftmaxHyper(
            learning_rate=cls.get("learning_rate", 1.0),
            epochs=cls.get("epochs", 300),
            l2=cls.get("l2", 1e-4),
        ),
    )
    seeds = doc.get("seeds")
    if not seeds:
        raise UsageError("config must list explicit seeds")
    test_fraction = doc.get("split", {}).get("test_fraction", 0.2)
    report = compare_experiment(
        gen_cfg, pipeline, seeds, test_fraction=test_fraction, dataset=dataset
    )
    atomic_write_text(args.out, json.dumps(report.to_dict()))
    agg = report.to_dict()["aggregate"]
    print(f"{'arm':<14} {'accuracy':>16} {'mAP':>16}")
    for arm, acc_key, map_key in (
        ("baseline", "baseline_acc", "baseline_map"),
        ("subdivided", "sfm_acc", "sfm_map"),
        ("random-group", "random_sfm_acc", None),
    ):
        acc = f"{agg[acc_key]['mean']:.4f}+-{agg[acc_key]['std']:.4f}"
        map_str = "-" if map_key is None else f"{agg[map_key]['mean']:.4f}+-{agg[map_key]['std']:.4f}"
        print(f"{arm:<14} {acc:>16} {map_str:>16}")
    if args.csv_out:
        keys = ["seed", "split_hash", "baseline_acc", "sfm_acc", "random_sfm_acc",
                "baseline_map", "sfm_map", "random_sfm_map"]
        _write_csv(args.csv_out, keys, [[r[k] for k in keys] for r in report.records])
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    ds = load_dataset(args.data)
    app = create_app(ds, static_dir=args.static_dir, out_dir=args.out_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subfusion",
        description="Class subdivision + confidence fusion classification pipeline",
    )
    parser.add_argument("--version", action="version", version=f"subfusion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common_seed = {"type": int, "default": 0, "help": "RNG seed (default 0)"}

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("kind", choices=["figure1", "subspaces", "imbalanced"])
    p.add_argument("--n", type=int, default=200, help="samples per class / per subspace")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--mode-separation", type=float, default=7.0)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--noise-sigma", type=float, default=0.6)
    p.add_argument("--counts", default="9,29,17", help="imbalanced: per-class counts")
    p.add_argument("--ambient-dim", type=int, default=10)
    p.add_argument("--subspace-dims", default="2,2,2")
    p.add_argument("--seed", **common_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="2-D embedding of a feature file")
    p.add_argument("--data", required=True)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", **common_seed)
    p.add_argument("--out", required=True)
    p.add_argument("--kl-out", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="cluster a feature file")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda-rel", type=float, default=DEFAULT_LAMBDA_REL)
    p.add_argument("--method", choices=["ssc", "random"], default="ssc")
    p.add_argument("--seed", **common_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("subdivide", help="compute a subdivision file")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["ratio", "manual", "suggest"], required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--k", default=None, help="manual counts: '1,1,2,2' or 'c2=2,c3=2'")
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--mode", choices=sorted(_MODE_ALIASES), default="full")
    p.add_argument("--embedding", default=None, help="coordinates CSV from `embed`")
    p.add_argument("--lambda-rel", type=float, default=DEFAULT_LAMBDA_REL)
    p.add_argument("--seed", **common_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_subdivide)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="pipeline config JSON supplying defaults")
    p.add_argument("--subdivision", default=None, help="subdivision JSON from `subdivide`")
    p.add_argument("--k", default=None, help="'auto-ratio', 'auto-suggest', '1,1,2,2', 'c2=2'")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--mode", choices=sorted(_MODE_ALIASES), default=None)
    p.add_argument("--embedding", default=None)
    p.add_argument("--lambda-rel", type=float, default=None)
    p.add_argument("--extractor", choices=["identity", "standardize", "pca"], default="standardize")
    p.add_argument("--pca-dim", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--seed", **common_seed)
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a feature file with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="baseline vs subdivision vs random grouping")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv-out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the interactive tuning service")
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static-dir", default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv) -> int:
    """Execute one CLI invocation; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (DataError, SubfusionError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:  # pragma: no cover - thin process wrapper
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":  # pragma: no cover
    main()
