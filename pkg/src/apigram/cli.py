"""Command-line pipeline: synth, train, classify, evaluate, export-images.

Every run writes a config echo file (config_echo.json) into its output
directory recording the subcommand and all effective parameters with
absolute paths; `apigram rerun <echo>` re-executes it and reproduces every
output byte for byte.  Exit codes: 0 success, 2 usage, 3 input errors,
4 data/parameter errors, 5 model-store errors, 6 filesystem errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import re
import sys
from pathlib import Path

from . import evaluate as ev
from . import featurize, image_export, persistence, synth_corpus
from .errors import ApigramError, DataError, IoError, MissingTruth, VocabTooLarge
from .feature_select import SelectionParams, select_features
from .profile_classify import ClassificationResult, build_profiles, classify_all
from .report_ingest import load_corpus, load_manifest

DEFAULT_PROFILE_CAP = 20_000

_FILENAME_SAFE = re.compile(r"[^A-Za-z0-9._-]")


def _echo(out_dir: Path, subcommand: str, params: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"subcommand": subcommand, "params": params}
    (out_dir / "config_echo.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _float_csv(values: list[float]) -> list[str]:
    return [repr(v) for v in values]


def cmd_synth(params: dict) -> int:
    out_dir = Path(params["out"])
    _echo(out_dir, "synth", params)

    templates = []
    by_name = dict(synth_corpus.BUILTIN_TEMPLATES)
    for path in params["template_files"]:
        custom = synth_corpus.load_template(path)
        by_name[custom.class_name] = custom
    for name in params["classes"]:
        if name not in by_name:
            raise DataError(f"unknown class {name!r}; built-ins are "
                            f"{sorted(synth_corpus.BUILTIN_TEMPLATES)}")
        templates.append(dataclasses.replace(by_name[name],
                                             noise_rate=params["noise"]))

    manifest_path = synth_corpus.write_corpus(
        templates, params["train_per_class"], params["test_per_class"],
        params["seed"], out_dir)
    _, stats = load_corpus(manifest_path)
    print(stats.table())
    print(f"manifest: {manifest_path}")
    return 0


def cmd_train(params: dict) -> int:
    out_dir = Path(params["out"])
    _echo(out_dir, "train", params)

    manifest = load_manifest(params["manifest"])
    reports, stats = load_corpus(manifest, split="train")
    labels = {r.sample_id: r.label for r in reports}
    n_classes = len({lab for lab in labels.values() if lab is not None})
    if n_classes < 2:
        raise DataError(f"need >= 2 classes in the train split, found {n_classes}")

    order = params["order"]
    docs = [featurize.ngrams(r, order) for r in reports]
    sel_params = SelectionParams(min_df=params["min_df"],
                                 max_df_fraction=params["max_df_fraction"],
                                 top_k=params["top_k"])
    selected, sel_report = select_features(docs, sel_params)

    from .profile_classify import build_profiles
    profiles = build_profiles(docs, labels, selected, params["profile_cap"])
    meta = persistence.ModelMeta(order_n=order, selection=sel_params,
                                 profile_cap=params["profile_cap"])
    model_path = out_dir / "model.txt"
    persistence.save_model(profiles, selected, meta, model_path)

    selection_payload = {
        "vocab_before": sel_report.vocab_before,
        "vocab_after": sel_report.vocab_after,
        "kept_fraction": sel_report.kept_fraction,
        "rules_applied": [[name, removed] for name, removed in
                          sel_report.rules_applied],
        "profiles": {p.class_name: {"tokens": len(p.token_set),
                                    "train_samples": p.provenance}
                     for p in profiles},
    }
    (out_dir / "selection.json").write_text(
        json.dumps(selection_payload, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    print(stats.table())
    print(f"selection: {sel_report.vocab_before} -> {sel_report.vocab_after} "
          f"tokens (kept {sel_report.kept_fraction:.4f}); rules "
          + ", ".join(f"{name} removed {n}" for name, n in sel_report.rules_applied))
    for p in profiles:
        print(f"profile {p.class_name}: {len(p.token_set)} tokens "
              f"from {p.provenance} samples")
    print(f"model: {model_path}")
    return 0


def _load_split_docs(manifest_path: str, split: str, order: int):
    split_arg = None if split == "all" else split
    reports, _ = load_corpus(load_manifest(manifest_path), split=split_arg)
    return reports, [featurize.ngrams(r, order) for r in reports]


def cmd_classify(params: dict) -> int:
    out_dir = Path(params["out"])
    _echo(out_dir, "classify", params)

    store = persistence.load_model(params["model"])
    _, docs = _load_split_docs(params["manifest"], params["split"],
                               store.meta.order_n)
    results = classify_all(docs, list(store.profiles), frozenset(store.vocab))

    class_names = [p.class_name for p in store.profiles]
    lines = ["sample_id,predicted,margin," +
             ",".join(f"score:{c}" for c in class_names)]
    for r in results:
        scores = _float_csv([r.scores[c] for c in class_names])
        lines.append(f"{r.sample_id},{r.predicted},{r.margin!r}," + ",".join(scores))
    pred_path = out_dir / "predictions.csv"
    pred_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(results)} predictions to {pred_path}")
    return 0


def _read_predictions(path: str) -> list[ClassificationResult]:
    import csv

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read predictions {path}: {exc}") from exc
    if not rows or rows[0][:3] != ["sample_id", "predicted", "margin"]:
        raise DataError(f"{path} is not a predictions file")
    classes = [c.removeprefix("score:") for c in rows[0][3:]]
    results = []
    for row in rows[1:]:
        scores = {c: float(v) for c, v in zip(classes, row[3:])}
        results.append(ClassificationResult(sample_id=row[0], predicted=row[1],
                                            margin=float(row[2]), scores=scores))
    return results


def cmd_evaluate(params: dict) -> int:
    out_dir = Path(params["out"])
    _echo(out_dir, "evaluate", params)

    results = _read_predictions(params["predictions"])
    manifest = load_manifest(params["manifest"])
    truth = {e.sample_id: e.label for e in manifest.entries if e.label is not None}
    for r in results:
        if r.sample_id not in truth:
            raise MissingTruth(f"sample {r.sample_id!r} has no label in the "
                               "manifest")

    cm = ev.confusion(results, truth)
    report = ev.metrics(cm)
    (out_dir / "metrics.json").write_text(ev.metrics_to_json(report),
                                          encoding="utf-8")
    table = ev.metrics_table(report)
    (out_dir / "metrics.txt").write_text(table, encoding="utf-8")
    (out_dir / "confusion.csv").write_text(ev.confusion_to_csv(cm),
                                           encoding="utf-8")
    print(table, end="")
    return 0


def cmd_export_images(params: dict) -> int:
    out_dir = Path(params["out"])
    _echo(out_dir, "export-images", params)

    stages = params["stages"]
    unknown = set(stages) - set(image_export.STAGE_ORDER)
    if unknown:
        raise DataError(f"unknown stages {sorted(unknown)}; valid stages are "
                        f"{list(image_export.STAGE_ORDER)}")
    store = persistence.load_model(params["model"])
    if len(store.vocab) > image_export.MAX_VOCAB:
        raise VocabTooLarge(
            f"model vocabulary of {len(store.vocab)} tokens exceeds the "
            f"{image_export.MAX_VOCAB}-pixel grid; re-train with a smaller top_k")

    _, docs = _load_split_docs(params["manifest"], params["split"],
                               store.meta.order_n)
    if params["weights"] == "tfidf":
        vectors = featurize.tfidf(docs) if docs else []
    else:
        vectors = [
            featurize.term_frequency(d) if d.tokens else
            featurize.WeightedVector(sample_id=d.sample_id, weights={},
                                     scheme=featurize.TF)
            for d in docs
        ]

    upto = max(stages, key=image_export.STAGE_ORDER.index)
    count = 0
    for vec in vectors:
        raw = image_export.vector_to_image(vec, store.vocab)
        chain = image_export.run_chain(raw, upto, sigma=params["sigma"],
                                       clip_limit=params["clip_limit"],
                                       grid=params["grid"])
        stem = _FILENAME_SAFE.sub("_", vec.sample_id)
        for stage in stages:
            image_export.export_png(chain[stage], out_dir / f"{stem}.{stage}.png")
            count += 1
    print(f"wrote {count} images ({len(vectors)} samples x {len(stages)} stages) "
          f"to {out_dir}")
    return 0


DISPATCH = {
    "synth": cmd_synth,
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "export-images": cmd_export_images,
}


def cmd_rerun(echo_path: str) -> int:
    try:
        payload = json.loads(Path(echo_path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read config echo {echo_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config echo {echo_path} is not valid JSON: {exc.msg}") \
            from exc
    sub = payload.get("subcommand")
    if sub not in DISPATCH or not isinstance(payload.get("params"), dict):
        raise DataError(f"config echo {echo_path} does not describe a known "
                        "subcommand")
    return DISPATCH[sub](payload["params"])


def _abspath(p: str) -> str:
    return str(Path(p).resolve())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apigram",
        description="Behavioral malware classification from sandbox reports "
                    "via API-call n-grams and Jaccard similarity.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-per-class", type=int, default=20)
    p.add_argument("--test-per-class", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0,
                   help="noise rate applied to every template")
    p.add_argument("--classes", default=",".join(sorted(
        synth_corpus.BUILTIN_TEMPLATES)),
        help="comma-separated class names to generate")
    p.add_argument("--template", action="append", default=[], metavar="FILE",
                   help="custom template JSON (may repeat; overrides built-ins)")

    p = sub.add_parser("train", help="build per-class profiles into a model file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--order", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--min-df", type=int, default=SelectionParams.min_df)
    p.add_argument("--max-df-fraction", type=float,
                   default=SelectionParams.max_df_fraction)
    p.add_argument("--top-k", type=int, default=SelectionParams.top_k)
    p.add_argument("--profile-cap", type=int, default=DEFAULT_PROFILE_CAP)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("classify", help="classify manifest samples with a model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("evaluate", help="score predictions against manifest labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("export-images",
                       help="render feature vectors as grayscale PNGs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--stages", default="raw",
                   help="comma-separated subset of raw,blurred,clahe,sobel")
    p.add_argument("--weights", choices=("tf", "tfidf"), default="tf")
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.add_argument("--sigma", type=float, default=1.0, help="gaussian blur sigma")
    p.add_argument("--clip-limit", type=float, default=2.0, help="CLAHE clip limit")
    p.add_argument("--grid", type=int, default=8, help="CLAHE tile grid")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("rerun", help="re-execute a run from its config echo file")
    p.add_argument("echo", help="path to a config_echo.json")
    return parser


def _params_from_args(args: argparse.Namespace) -> dict:
    if args.subcommand == "synth":
        return {
            "out": _abspath(args.out),
            "seed": args.seed,
            "train_per_class": args.train_per_class,
            "test_per_class": args.test_per_class,
            "noise": args.noise,
            "classes": [c for c in args.classes.split(",") if c],
            "template_files": [_abspath(t) for t in args.template],
        }
    if args.subcommand == "train":
        return {
            "manifest": _abspath(args.manifest),
            "order": args.order,
            "min_df": args.min_df,
            "max_df_fraction": args.max_df_fraction,
            "top_k": args.top_k,
            "profile_cap": args.profile_cap,
            "out": _abspath(args.out),
        }
    if args.subcommand == "classify":
        return {
            "manifest": _abspath(args.manifest),
            "model": _abspath(args.model),
            "split": args.split,
            "out": _abspath(args.out),
        }
    if args.subcommand == "evaluate":
        return {
            "predictions": _abspath(args.predictions),
            "manifest": _abspath(args.manifest),
            "out": _abspath(args.out),
        }
    return {
        "manifest": _abspath(args.manifest),
        "model": _abspath(args.model),
        "stages": [s for s in args.stages.split(",") if s],
        "weights": args.weights,
        "split": args.split,
        "sigma": args.sigma,
        "clip_limit": args.clip_limit,
        "grid": args.grid,
        "out": _abspath(args.out),
    }


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "rerun":
            return cmd_rerun(args.echo)
        return DISPATCH[args.subcommand](_params_from_args(args))
    except ApigramError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return IoError.exit_code


if __name__ == "__main__":
    sys.exit(main())
