"""Leave-one-document-out evaluation and metric reporting.

Holding out whole documents prevents within-document leakage: per fold the
vocabulary, IDF statistics, and kernel rows are computed from the training
documents only.  Counts are pooled across folds before computing metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import seqmodel, svm, treekernel
from .corpus import ClauseCategory, Corpus, LabeledSentence, StatsTable
from .features import FeatureConfig, build_vocabulary, vectorize_all
from .trees import ParseTree

MODEL_KINDS = ("linear-bow", "kernel-sstk", "chain")


class TooFewDocuments(ValueError):
    pass


class MissingTreebank(ValueError):
    pass


class UnknownModelKind(ValueError):
    pass


@dataclass(frozen=True)
class FoldSplit:
    held_out: str
    train: tuple[str, ...]


def make_loo_splits(corpus: Corpus) -> list[FoldSplit]:
    """One split per document, in document order."""
    if corpus.M < 2:
        raise TooFewDocuments(f"need at least 2 documents, corpus has {corpus.M}")
    names = [d.name for d in corpus.documents]
    return [
        FoldSplit(held_out=name, train=tuple(n for n in names if n != name))
        for name in names
    ]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass
class TargetCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def vacuous(self) -> bool:
        return self.tp + self.fp + self.fn == 0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class SentenceVerdict:
    """Gold or predicted labels of one sentence: the detection boolean plus
    the set of (potentially unfair) clause categories."""

    detection: bool
    categories: frozenset[ClauseCategory] = frozenset()

    @classmethod
    def from_gold(cls, ls: LabeledSentence) -> "SentenceVerdict":
        return cls(detection=ls.detection_label, categories=ls.positive_categories())


@dataclass
class MetricsReport:
    detection: TargetCounts = field(default_factory=TargetCounts)
    categories: dict[ClauseCategory, TargetCounts] = field(
        default_factory=lambda: {c: TargetCounts() for c in ClauseCategory}
    )
    warnings: list[str] = field(default_factory=list)

    @property
    def micro(self) -> TargetCounts:
        return TargetCounts(
            tp=sum(c.tp for c in self.categories.values()),
            fp=sum(c.fp for c in self.categories.values()),
            fn=sum(c.fn for c in self.categories.values()),
        )

    @property
    def macro_f1(self) -> float:
        scored = [c for c in self.categories.values() if not c.vacuous]
        if not scored:
            return 0.0
        return sum(c.f1 for c in scored) / len(scored)

    def add(self, other: "MetricsReport") -> None:
        self.detection.tp += other.detection.tp
        self.detection.fp += other.detection.fp
        self.detection.fn += other.detection.fn
        for cat, counts in other.categories.items():
            mine = self.categories[cat]
            mine.tp += counts.tp
            mine.fp += counts.fp
            mine.fn += counts.fn
        self.warnings.extend(other.warnings)

    def to_record(self) -> dict:
        def counts_record(c: TargetCounts) -> dict:
            return {
                "tp": c.tp,
                "fp": c.fp,
                "fn": c.fn,
                "precision": c.precision,
                "recall": c.recall,
                "f1": c.f1,
                "vacuous": c.vacuous,
            }

        return {
            "detection": counts_record(self.detection),
            "categories": {
                cat.symbol: counts_record(c) for cat, c in self.categories.items()
            },
            "micro": counts_record(self.micro),
            "macro_f1": self.macro_f1,
            "warnings": sorted(self.warnings),
        }

    def render(self) -> str:
        rows = [("target", "tp", "fp", "fn", "P", "R", "F1")]

        def fmt(name: str, c: TargetCounts) -> tuple[str, ...]:
            flag = " (vacuous)" if c.vacuous else ""
            return (
                name + flag,
                str(c.tp),
                str(c.fp),
                str(c.fn),
                f"{c.precision:.3f}",
                f"{c.recall:.3f}",
                f"{c.f1:.3f}",
            )

        rows.append(fmt("detection", self.detection))
        for cat in ClauseCategory:
            rows.append(fmt(cat.display_name, self.categories[cat]))
        rows.append(fmt("micro (categories)", self.micro))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        lines.append(f"macro-F1 (non-vacuous categories): {self.macro_f1:.3f}")
        for w in sorted(self.warnings):
            lines.append(f"warning: {w}")
        return "\n".join(lines) + "\n"


class LengthMismatch(ValueError):
    pass


def compute_metrics(
    gold: Sequence[SentenceVerdict], pred: Sequence[SentenceVerdict]
) -> MetricsReport:
    """Pooled per-target counts over parallel gold/predicted sentence labels."""
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold sentences but {len(pred)} predictions")
    report = MetricsReport()
    for g, p in zip(gold, pred):
        if g.detection and p.detection:
            report.detection.tp += 1
        elif p.detection:
            report.detection.fp += 1
        elif g.detection:
            report.detection.fn += 1
        for cat in ClauseCategory:
            in_g = cat in g.categories
            in_p = cat in p.categories
            counts = report.categories[cat]
            if in_g and in_p:
                counts.tp += 1
            elif in_p:
                counts.fp += 1
            elif in_g:
                counts.fn += 1
    return report


# ---------------------------------------------------------------------------
# Fold fitting and prediction
# ---------------------------------------------------------------------------

def _train_documents(corpus: Corpus, fold: FoldSplit):
    return [corpus.document(name) for name in fold.train]


def _flatten(documents) -> list[LabeledSentence]:
    sentences: list[LabeledSentence] = []
    for doc in documents:
        sentences.extend(doc.sentences)
    return sentences


def _trees_for(
    treebank: dict[str, list[ParseTree]] | None, documents
) -> list[ParseTree] | None:
    if treebank is None:
        return None
    trees: list[ParseTree] = []
    for doc in documents:
        got = treebank.get(doc.name)
        if got is None or len(got) != len(doc.sentences):
            raise MissingTreebank(f"treebank missing or misaligned for document {doc.name!r}")
        trees.extend(got)
    return trees


def fit_detection_fold(
    corpus: Corpus,
    fold: FoldSplit,
    feature_cfg: FeatureConfig,
    model_kind: str,
    train_cfg: svm.TrainConfig,
    treebank: dict[str, list[ParseTree]] | None = None,
    lam: float = treekernel.DEFAULT_LAMBDA,
) -> dict:
    """Fit one fold's detection model on the training documents only.

    Returns a plain JSON-able record of everything fitted from data, so two
    fits can be compared byte-for-byte.
    """
    from .modelio import chain_payload, kernel_payload, linear_payload, vocabulary_record

    if model_kind not in MODEL_KINDS:
        raise UnknownModelKind(model_kind)
    train_docs = _train_documents(corpus, fold)
    sentences = _flatten(train_docs)
    needs_trees = model_kind == "kernel-sstk" or feature_cfg.use_pos
    if needs_trees and treebank is None:
        raise MissingTreebank(f"model kind {model_kind!r} requires a treebank")
    trees = _trees_for(treebank, train_docs) if needs_trees else None

    record: dict = {"fold": fold.held_out, "kind": model_kind}
    warnings: list[str] = []

    if model_kind == "kernel-sstk":
        y = [1 if ls.detection_label else -1 for ls in sentences]
        gram = treekernel.gram_matrix(trees, lam=lam, normalize=True)
        model = svm.train_smo(gram, y, train_cfg)
        if model.warning:
            warnings.append(f"fold {fold.held_out}: {model.warning}")
        support_trees = [trees[i].to_bracketed() for i in model.support_idx]
        record["payload"] = kernel_payload(model, support_trees)
    else:
        vocab = build_vocabulary(sentences, trees, feature_cfg)
        X = vectorize_all(sentences, trees, vocab, feature_cfg)
        record["vocabulary"] = vocabulary_record(vocab)
        if model_kind == "linear-bow":
            y = [1 if ls.detection_label else -1 for ls in sentences]
            model = svm.train_linear(X, y, train_cfg)
            if model.warning:
                warnings.append(f"fold {fold.held_out}: {model.warning}")
            record["payload"] = linear_payload(model)
        else:  # chain
            examples = []
            pos = 0
            for doc in train_docs:
                k = len(doc.sentences)
                ys = tuple(1 if ls.detection_label else 0 for ls in doc.sentences)
                examples.append(seqmodel.SeqExample(xs=tuple(X[pos : pos + k]), ys=ys))
                pos += k
            model = seqmodel.train_chain(examples, train_cfg, labels=("negative", "positive"))
            record["payload"] = chain_payload(model)
    record["warnings"] = warnings
    return record


def _predict_fold(
    corpus: Corpus,
    fold: FoldSplit,
    feature_cfg: FeatureConfig,
    model_kind: str,
    train_cfg: svm.TrainConfig,
    treebank: dict[str, list[ParseTree]] | None,
    lam: float,
    threshold: float,
) -> tuple[list[SentenceVerdict], list[SentenceVerdict], list[str]]:
    """Fit on the fold's training documents, predict the held-out document."""
    from .modelio import chain_from_payload, kernel_from_payload, linear_from_payload, vocabulary_from_record
    from .trees import parse_bracketed

    record = fit_detection_fold(corpus, fold, feature_cfg, model_kind, train_cfg, treebank, lam)
    held = corpus.document(fold.held_out)
    gold = [SentenceVerdict.from_gold(ls) for ls in held.sentences]

    if model_kind == "kernel-sstk":
        model, support_trees = kernel_from_payload(record["payload"])
        held_trees = _trees_for(treebank, [held])
        support = [parse_bracketed(s) for s in support_trees]
        pred = []
        for tree in held_trees:
            row = treekernel.kernel_row(tree, support, lam=model.lam, normalize=model.normalized)
            score = svm.predict_kernel(model, row)
            pred.append(SentenceVerdict(detection=score >= threshold))
    else:
        held_trees = _trees_for(treebank, [held]) if feature_cfg.use_pos else None
        vocab = vocabulary_from_record(record["vocabulary"])
        X = vectorize_all(held.sentences, held_trees, vocab, feature_cfg)
        if model_kind == "linear-bow":
            model = linear_from_payload(record["payload"])
            pred = [
                SentenceVerdict(detection=svm.predict_linear(model, x) >= threshold)
                for x in X
            ]
        else:
            model = chain_from_payload(record["payload"])
            ys, _ = seqmodel.viterbi(model, X)
            pred = [SentenceVerdict(detection=y == 1) for y in ys]
    return gold, pred, record["warnings"]


def run_detection_eval(
    corpus: Corpus,
    feature_cfg: FeatureConfig,
    model_kind: str,
    train_cfg: svm.TrainConfig,
    treebank: dict[str, list[ParseTree]] | None = None,
    lam: float = treekernel.DEFAULT_LAMBDA,
    threshold: float = 0.0,
) -> MetricsReport:
    """Leave-one-document-out detection evaluation with the chosen model."""
    report = MetricsReport()
    for fold in make_loo_splits(corpus):
        try:
            gold, pred, warnings = _predict_fold(
                corpus, fold, feature_cfg, model_kind, train_cfg, treebank, lam, threshold
            )
        except (svm.EmptyData, svm.SingleClass, MissingTreebank) as err:
            raise type(err)(f"fold {fold.held_out}: {err}") from err
        fold_report = compute_metrics(gold, pred)
        fold_report.warnings.extend(warnings)
        report.add(fold_report)
    return report


def run_category_eval(
    corpus: Corpus,
    feature_cfg: FeatureConfig,
    train_cfg: svm.TrainConfig,
    treebank: dict[str, list[ParseTree]] | None = None,
    threshold: float = 0.0,
) -> MetricsReport:
    """LOO multi-label category classification with one-vs-rest linear models."""
    if feature_cfg.use_pos and treebank is None:
        raise MissingTreebank("POS features require a treebank")
    report = MetricsReport()
    for fold in make_loo_splits(corpus):
        train_docs = _train_documents(corpus, fold)
        sentences = _flatten(train_docs)
        trees = _trees_for(treebank, train_docs) if feature_cfg.use_pos else None
        vocab = build_vocabulary(sentences, trees, feature_cfg)
        X = vectorize_all(sentences, trees, vocab, feature_cfg)
        held = corpus.document(fold.held_out)
        held_trees = _trees_for(treebank, [held]) if feature_cfg.use_pos else None
        X_held = vectorize_all(held.sentences, held_trees, vocab, feature_cfg)

        predicted: list[set[ClauseCategory]] = [set() for _ in held.sentences]
        warnings: list[str] = []
        for cat in ClauseCategory:
            y = [1 if cat in ls.positive_categories() else -1 for ls in sentences]
            model = svm.train_linear(X, y, train_cfg)
            if model.warning:
                warnings.append(f"fold {fold.held_out}, {cat.symbol}: {model.warning}")
            for i, x in enumerate(X_held):
                if svm.predict_linear(model, x) >= threshold:
                    predicted[i].add(cat)

        gold = [SentenceVerdict.from_gold(ls) for ls in held.sentences]
        pred = [
            SentenceVerdict(detection=bool(cats), categories=frozenset(cats))
            for cats in predicted
        ]
        fold_report = compute_metrics(gold, pred)
        fold_report.warnings.extend(warnings)
        report.add(fold_report)
    return report


# ---------------------------------------------------------------------------
# Reference corpus statistics
# ---------------------------------------------------------------------------

#: Published statistics of the official 50-document corpus.
REFERENCE_CLAUSE_COUNTS = {
    ClauseCategory.ARBITRATION: (44, 28),
    ClauseCategory.UNILATERAL_CHANGE: (188, 49),
    ClauseCategory.CONTENT_REMOVAL: (118, 45),
    ClauseCategory.JURISDICTION: (68, 40),
    ClauseCategory.CHOICE_OF_LAW: (70, 47),
    ClauseCategory.LIMITATION_OF_LIABILITY: (296, 49),
    ClauseCategory.UNILATERAL_TERMINATION: (236, 48),
    ClauseCategory.CONTRACT_BY_USING: (117, 48),
}
REFERENCE_DOCUMENTS = 50
REFERENCE_TOTAL_SENTENCES = 12_011
REFERENCE_POSITIVE_SENTENCES = 1_032
REFERENCE_POSITIVE_FRACTION = 0.086
REFERENCE_MIN_RATE = 0.033
REFERENCE_MAX_RATE = 0.162

SENTENCE_TOTAL_RTOL = 0.03  # segmenter divergence allowance
POSITIVE_FRACTION_ATOL = 0.01  # one percentage point
MIN_RATE_CEILING = 0.045
MAX_RATE_FLOOR = 0.14


@dataclass(frozen=True)
class DiffEntry:
    name: str
    expected: str
    actual: str
    status: str  # "pass" | "fail" | "not comparable"
    delta: str = ""


@dataclass(frozen=True)
class DiffReport:
    entries: tuple[DiffEntry, ...]
    comparable: bool

    @property
    def passed(self) -> bool:
        return self.comparable and all(e.status == "pass" for e in self.entries)

    def to_record(self) -> dict:
        return {
            "comparable": self.comparable,
            "passed": self.passed,
            "entries": [
                {
                    "name": e.name,
                    "expected": e.expected,
                    "actual": e.actual,
                    "status": e.status,
                    "delta": e.delta,
                }
                for e in self.entries
            ],
        }

    def render(self) -> str:
        rows = [("check", "expected", "actual", "delta", "status")]
        for e in self.entries:
            rows.append((e.name, e.expected, e.actual, e.delta, e.status))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        return "\n".join(lines) + "\n"


def compare_to_paper_stats(stats: StatsTable) -> DiffReport:
    """Diff a StatsTable against the published reference counts.

    The reference describes the official 50-document corpus only; any other
    document count marks every entry "not comparable".
    """
    comparable = stats.n_documents == REFERENCE_DOCUMENTS
    entries: list[DiffEntry] = []

    def entry(name: str, expected: str, actual: str, ok: bool, delta: str = "") -> None:
        status = "pass" if ok else "fail"
        if not comparable:
            status = "not comparable"
        entries.append(DiffEntry(name, expected, actual, status, delta))

    by_cat = {cs.category: cs for cs in stats.per_category}
    for cat, (clauses, docs) in REFERENCE_CLAUSE_COUNTS.items():
        got = by_cat[cat]
        entry(
            f"{cat.display_name}: clauses",
            str(clauses),
            str(got.clause_count),
            got.clause_count == clauses,
            f"{got.clause_count - clauses:+d}",
        )
        entry(
            f"{cat.display_name}: documents",
            str(docs),
            str(got.document_count),
            got.document_count == docs,
            f"{got.document_count - docs:+d}",
        )

    delta_frac = (
        (stats.total_sentences - REFERENCE_TOTAL_SENTENCES) / REFERENCE_TOTAL_SENTENCES
    )
    entry(
        "total sentences",
        f"{REFERENCE_TOTAL_SENTENCES} ±{SENTENCE_TOTAL_RTOL:.0%}",
        str(stats.total_sentences),
        abs(delta_frac) <= SENTENCE_TOTAL_RTOL,
        f"{delta_frac:+.2%}",
    )
    frac_delta = stats.positive_fraction - REFERENCE_POSITIVE_FRACTION
    entry(
        "positive fraction",
        f"{REFERENCE_POSITIVE_FRACTION:.1%} ±{POSITIVE_FRACTION_ATOL:.0%}",
        f"{stats.positive_fraction:.2%}",
        abs(frac_delta) <= POSITIVE_FRACTION_ATOL,
        f"{frac_delta:+.2%}",
    )
    entry(
        "min document rate",
        f"<= {MIN_RATE_CEILING:.1%}",
        f"{stats.min_rate:.2%} ({stats.min_rate_document})",
        stats.min_rate <= MIN_RATE_CEILING,
    )
    entry(
        "max document rate",
        f">= {MAX_RATE_FLOOR:.1%}",
        f"{stats.max_rate:.2%} ({stats.max_rate_document})",
        stats.max_rate >= MAX_RATE_FLOOR,
    )
    return DiffReport(entries=tuple(entries), comparable=comparable)


def render_stats(stats: StatsTable) -> str:
    rows = [("category", "clauses", "documents")]
    for cs in stats.per_category:
        rows.append((cs.category.display_name, str(cs.clause_count), str(cs.document_count)))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    lines.append("")
    lines.append(f"documents:          {stats.n_documents}")
    lines.append(f"sentences:          {stats.total_sentences}")
    lines.append(
        f"positive sentences: {stats.positive_sentences} ({stats.positive_fraction:.1%})"
    )
    if stats.min_rate_document:
        lines.append(
            f"positive rate range: {stats.min_rate:.1%} ({stats.min_rate_document}) "
            f"to {stats.max_rate:.1%} ({stats.max_rate_document})"
        )
    return "\n".join(lines) + "\n"


def stats_record(stats: StatsTable) -> dict:
    return {
        "per_category": [
            {
                "category": cs.category.symbol,
                "name": cs.category.display_name,
                "clauses": cs.clause_count,
                "documents": cs.document_count,
            }
            for cs in stats.per_category
        ],
        "documents": stats.n_documents,
        "sentences": stats.total_sentences,
        "positive_sentences": stats.positive_sentences,
        "positive_fraction": stats.positive_fraction,
        "min_rate": {"document": stats.min_rate_document, "value": stats.min_rate},
        "max_rate": {"document": stats.max_rate_document, "value": stats.max_rate},
        "positive_levels": list(stats.positive_levels),
    }
