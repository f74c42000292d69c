"""Command-line interface.

Exit codes: 0 success, 2 usage errors, 3 data errors, 4 training
non-convergence (diagnostics are still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import random
import sys
from pathlib import Path

from . import evaluation, seqmodel, svm, treekernel
from .analyze import TreeAlignmentError, analyze_text, result_json
from .corpus import (
    ClauseCategory,
    CorpusError,
    EmptyCorpus,
    corpus_fingerprint,
    corpus_stats,
    load_corpus,
)
from .features import FeatureConfig, MissingTree, build_vocabulary, vectorize_all
from .modelio import (
    ModelBundle,
    ModelFormatError,
    canonical_json_bytes,
    category_payload,
    chain_payload,
    kernel_payload,
    linear_payload,
    load_model,
    save_model,
    train_config_record,
)
from .report import render_report
from .service import DEFAULT_MAX_BYTES, serve
from .trees import TreeBankMismatch, TreeParseError, load_treebank, read_treebank_groups

USAGE_ERROR = 2
DATA_ERROR = 3
NO_CONVERGENCE = 4


class ConfigFileError(ValueError):
    pass


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigFileError(f"{path}:{lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _parse_bool(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigFileError(f"config key {key!r}: expected a boolean, got {value!r}")


def _parse_int_list(value: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(part.strip()) for part in value.split(",") if part.strip())
    except ValueError:
        raise ConfigFileError(f"config key {key!r}: expected comma-separated integers") from None


class RunSettings:
    """FeatureConfig + TrainConfig + kernel settings from a config file."""

    def __init__(self, values: dict[str, str] | None = None):
        values = dict(values or {})
        feature_kwargs: dict = {}
        if "ngram_orders" in values:
            feature_kwargs["ngram_orders"] = _parse_int_list(values.pop("ngram_orders"), "ngram_orders")
        for key in ("use_pos", "lowercase", "log_tf"):
            if key in values:
                feature_kwargs[key] = _parse_bool(values.pop(key), key)
        if "min_df" in values:
            feature_kwargs["min_df"] = int(values.pop("min_df"))
        self.feature_config = FeatureConfig(**feature_kwargs)

        train_kwargs: dict = {}
        if "C" in values:
            train_kwargs["C"] = float(values.pop("C"))
        if "positive_weight" in values:
            raw = values.pop("positive_weight")
            train_kwargs["positive_weight"] = None if raw in ("", "balanced") else float(raw)
        if "tol" in values:
            train_kwargs["tol"] = float(values.pop("tol"))
        if "max_iter" in values:
            train_kwargs["max_iter"] = int(values.pop("max_iter"))
        if "epochs" in values:
            train_kwargs["epochs"] = int(values.pop("epochs"))
        if "seed" in values:
            train_kwargs["seed"] = int(values.pop("seed"))
        self.train_config = svm.TrainConfig(**train_kwargs)

        self.lam = float(values.pop("lambda", treekernel.DEFAULT_LAMBDA))
        self.kernel_normalize = _parse_bool(values.pop("kernel_normalize", "true"), "kernel_normalize")
        self.positive_levels = _parse_int_list(values.pop("positive_levels", "2,3"), "positive_levels")
        if values:
            unknown = ", ".join(sorted(values))
            raise ConfigFileError(f"unknown config keys: {unknown}")

    def with_seed(self, seed: int | None) -> "RunSettings":
        if seed is not None:
            self.train_config = dataclasses.replace(self.train_config, seed=seed)
        return self


def _load_settings(config_path: str | None, seed: int | None) -> RunSettings:
    values = parse_config_file(config_path) if config_path else {}
    return RunSettings(values).with_seed(seed)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def cmd_stats(args: argparse.Namespace) -> int:
    try:
        settings = _load_settings(args.config, None)
    except (ConfigFileError, ValueError, OSError) as err:
        return _fail(str(err), USAGE_ERROR)
    try:
        corpus = load_corpus(args.corpus_dir, lenient=args.lenient)
    except EmptyCorpus as err:
        return _fail(str(err), USAGE_ERROR)
    except CorpusError as err:
        return _fail(str(err), DATA_ERROR)
    except OSError as err:
        return _fail(str(err), USAGE_ERROR)
    stats = corpus_stats(corpus, positive_levels=settings.positive_levels)
    diff = evaluation.compare_to_paper_stats(stats)
    sys.stdout.write(evaluation.render_stats(stats))
    sys.stdout.write("\n")
    sys.stdout.write(diff.render())
    if args.json:
        record = {
            "stats": evaluation.stats_record(stats),
            "reference_diff": diff.to_record(),
        }
        Path(args.json).write_bytes(canonical_json_bytes(record))
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _train_bundle(args: argparse.Namespace, settings: RunSettings) -> tuple[ModelBundle, int]:
    corpus = load_corpus(args.corpus, lenient=args.lenient)
    sentences = corpus.all_sentences()
    feature_cfg = settings.feature_config
    train_cfg = settings.train_config
    treebank = load_treebank(args.trees, corpus) if args.trees else None
    trees = None
    if feature_cfg.use_pos:
        if treebank is None:
            raise TreeBankMismatch("use_pos features require --trees")
        trees = [t for doc in corpus.documents for t in treebank[doc.name]]
    vocab = build_vocabulary(sentences, trees, feature_cfg)
    X = vectorize_all(sentences, trees, vocab, feature_cfg)

    metadata = {
        "task": args.task,
        "seed": train_cfg.seed,
        "train_config": train_config_record(train_cfg),
        "corpus_fingerprint": corpus_fingerprint(args.corpus),
        "n_documents": corpus.M,
        "n_sentences": corpus.N,
    }
    exit_code = 0

    if args.task == "category":
        models = {}
        for cat in ClauseCategory:
            y = [1 if cat in ls.positive_categories() else -1 for ls in sentences]
            models[cat] = svm.train_linear(X, y, train_cfg)
        bundle = ModelBundle(
            kind="category-ovr",
            feature_config=feature_cfg,
            vocabulary=vocab,
            payload=category_payload(models),
            metadata=metadata,
        )
        return bundle, exit_code

    y = [1 if ls.detection_label else -1 for ls in sentences]
    if args.model == "linear-bow":
        model = svm.train_linear(X, y, train_cfg)
        bundle = ModelBundle(
            kind="linear-bow",
            feature_config=feature_cfg,
            vocabulary=vocab,
            payload=linear_payload(model),
            metadata=metadata,
        )
    elif args.model == "chain":
        examples = []
        pos = 0
        for doc in corpus.documents:
            k = len(doc.sentences)
            ys = tuple(1 if ls.detection_label else 0 for ls in doc.sentences)
            examples.append(seqmodel.SeqExample(xs=tuple(X[pos : pos + k]), ys=ys))
            pos += k
        model = seqmodel.train_chain(examples, train_cfg, labels=("negative", "positive"))
        bundle = ModelBundle(
            kind="chain",
            feature_config=feature_cfg,
            vocabulary=vocab,
            payload=chain_payload(model),
            metadata=metadata,
        )
    else:  # kernel-sstk
        kernel_trees = [t for doc in corpus.documents for t in treebank[doc.name]]
        gram = treekernel.gram_matrix(
            kernel_trees, lam=settings.lam, normalize=settings.kernel_normalize
        )
        model = svm.train_smo(gram, y, train_cfg)
        if model.warning and "no-convergence" in model.warning:
            exit_code = NO_CONVERGENCE
        support_trees = [kernel_trees[i].to_bracketed() for i in model.support_idx]
        fallback = svm.train_linear(X, y, train_cfg)
        metadata["lambda"] = settings.lam
        metadata["kernel_normalize"] = settings.kernel_normalize
        bundle = ModelBundle(
            kind="kernel-sstk",
            feature_config=feature_cfg,
            vocabulary=vocab,
            payload=kernel_payload(model, support_trees),
            metadata=metadata,
            fallback=linear_payload(fallback),
        )
    return bundle, exit_code


def cmd_train(args: argparse.Namespace) -> int:
    if args.task == "category" and args.model != "linear-bow":
        return _fail("--task category supports only --model linear-bow", USAGE_ERROR)
    if args.model == "kernel-sstk" and not args.trees:
        return _fail("--model kernel-sstk requires --trees", USAGE_ERROR)
    try:
        settings = _load_settings(args.config, args.seed)
    except (ConfigFileError, ValueError, OSError) as err:
        return _fail(str(err), USAGE_ERROR)
    if settings.feature_config.use_pos and not args.trees:
        return _fail("use_pos features require --trees", USAGE_ERROR)
    try:
        bundle, exit_code = _train_bundle(args, settings)
    except (CorpusError, TreeBankMismatch, TreeParseError, ModelFormatError) as err:
        return _fail(str(err), DATA_ERROR)
    except (svm.EmptyData, svm.SingleClass) as err:
        return _fail(str(err), DATA_ERROR)
    except OSError as err:
        return _fail(str(err), USAGE_ERROR)
    save_model(bundle, args.out)
    warning = bundle.payload.get("warning")
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {bundle.kind} model to {args.out}")
    return exit_code


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def cmd_predict(args: argparse.Namespace) -> int:
    try:
        bundle = load_model(args.model)
    except (ModelFormatError, OSError) as err:
        return _fail(str(err), DATA_ERROR)
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as err:
        return _fail(str(err), DATA_ERROR)
    trees = None
    if args.trees:
        try:
            groups = read_treebank_groups(args.trees)
        except (TreeParseError, OSError) as err:
            return _fail(str(err), DATA_ERROR)
        if len(groups) != 1:
            return _fail(
                f"sidecar tree file must contain exactly one document group, found {len(groups)}",
                DATA_ERROR,
            )
        trees = groups[0]
    try:
        result = analyze_text(bundle, text, trees=trees)
    except (TreeAlignmentError, MissingTree) as err:
        return _fail(str(err), DATA_ERROR)
    payload = result_json(result)
    sys.stdout.buffer.write(payload)
    sys.stdout.buffer.flush()
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.report:
        render_report(result, args.report)
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        settings = _load_settings(args.config, args.seed)
    except (ConfigFileError, ValueError, OSError) as err:
        return _fail(str(err), USAGE_ERROR)
    if args.model_kind == "kernel-sstk" and not args.trees:
        return _fail("--model-kind kernel-sstk requires --trees", USAGE_ERROR)
    if settings.feature_config.use_pos and not args.trees:
        return _fail("use_pos features require --trees", USAGE_ERROR)
    try:
        corpus = load_corpus(args.corpus, lenient=args.lenient)
    except EmptyCorpus as err:
        return _fail(str(err), USAGE_ERROR)
    except CorpusError as err:
        return _fail(str(err), DATA_ERROR)

    treebank = None
    if args.trees:
        try:
            treebank = load_treebank(args.trees, corpus)
        except (TreeBankMismatch, TreeParseError, OSError) as err:
            return _fail(str(err), DATA_ERROR)
    try:
        if args.model_kind == "category-ovr":
            report = evaluation.run_category_eval(
                corpus, settings.feature_config, settings.train_config, treebank=treebank
            )
        else:
            report = evaluation.run_detection_eval(
                corpus,
                settings.feature_config,
                args.model_kind,
                settings.train_config,
                treebank=treebank,
                lam=settings.lam,
            )
    except (evaluation.TooFewDocuments, evaluation.MissingTreebank) as err:
        return _fail(str(err), DATA_ERROR)
    except (svm.EmptyData, svm.SingleClass) as err:
        return _fail(str(err), DATA_ERROR)
    sys.stdout.write(report.render())
    if args.json:
        record = {
            "model_kind": args.model_kind,
            "seed": settings.train_config.seed,
            "corpus_fingerprint": corpus_fingerprint(args.corpus),
            "metrics": report.to_record(),
        }
        Path(args.json).write_bytes(canonical_json_bytes(record))
    return 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args: argparse.Namespace) -> int:
    try:
        bundle = load_model(args.model)
    except (ModelFormatError, OSError) as err:
        return _fail(str(err), DATA_ERROR)
    try:
        serve(bundle, args.port, max_bytes=args.max_bytes)
    except OSError as err:
        return _fail(f"cannot bind port {args.port}: {err}", USAGE_ERROR)
    return 0


# ---------------------------------------------------------------------------
# kernel-selftest
# ---------------------------------------------------------------------------

def cmd_kernel_selftest(args: argparse.Namespace) -> int:
    rng = random.Random(args.seed)
    pairs = [
        (treekernel.random_tree(rng, max_nodes=12), treekernel.random_tree(rng, max_nodes=12))
        for _ in range(args.pairs)
    ]
    failures = 0
    for lam in (1.0, 0.5, 0.4):
        worst = 0.0
        for t1, t2 in pairs:
            fast = treekernel.sstk(t1, t2, lam)
            oracle = treekernel.fragment_pair_kernel(t1, t2, lam)
            if lam == 1.0:
                ok = round(fast) == round(oracle) and abs(fast - oracle) < 1e-9
            else:
                ok = abs(fast - oracle) < 1e-9
            worst = max(worst, abs(fast - oracle))
            if not ok:
                failures += 1
        status = "PASS" if failures == 0 else "FAIL"
        print(f"lambda={lam}: {len(pairs)} pairs, max |difference| {worst:.2e} ... {status}")
    if failures:
        print(f"kernel selftest FAILED on {failures} comparisons")
        return 1
    print("kernel selftest passed")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claudette",
        description="Detect potentially unfair clauses in Terms-of-Service documents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus statistics and reference comparison")
    p.add_argument("corpus_dir")
    p.add_argument("--config")
    p.add_argument("--json", help="also write the stats as JSON to this path")
    p.add_argument("--lenient", action="store_true", help="tolerate repeated-opener closing tags")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model on a tagged corpus")
    p.add_argument("--task", choices=("detect", "category"), required=True)
    p.add_argument("--model", choices=("linear-bow", "kernel-sstk", "chain"), default="linear-bow")
    p.add_argument("--corpus", required=True)
    p.add_argument("--trees")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="analyze one plain-text document")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--trees")
    p.add_argument("--report", help="write an HTML report to this path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="leave-one-document-out evaluation")
    p.add_argument("--corpus", required=True)
    p.add_argument(
        "--model-kind",
        choices=("linear-bow", "kernel-sstk", "chain", "category-ovr"),
        required=True,
    )
    p.add_argument("--trees")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", help="write the metrics record to this path")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the analysis HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--max-bytes", type=int, default=DEFAULT_MAX_BYTES)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("kernel-selftest", help="verify the tree kernel against fragment enumeration")
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kernel_selftest)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
