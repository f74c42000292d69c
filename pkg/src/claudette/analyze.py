"""Shared prediction pipeline behind the predict command and the service.

Both front ends call :func:`analyze_text` and serialize the result with
:func:`result_json`, so their outputs agree byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import svm, treekernel
from .corpus import CATEGORY_BY_SYMBOL, segment_sentences
from .features import vectorize_all
from .modelio import (
    ModelBundle,
    canonical_json_bytes,
    category_from_payload,
    chain_from_payload,
    kernel_from_payload,
    linear_from_payload,
)
from .seqmodel import viterbi
from .trees import ParseTree


@dataclass
class SentenceAnalysis:
    text: str
    start: int
    end: int
    detection: bool
    scores: dict[str, float] = field(default_factory=dict)
    categories: list[str] = field(default_factory=list)


@dataclass
class AnalysisResult:
    text: str
    model_kind: str
    sentences: list[SentenceAnalysis]
    warnings: list[str] = field(default_factory=list)


class TreeAlignmentError(ValueError):
    pass


def analyze_text(
    bundle: ModelBundle, text: str, trees: list[ParseTree] | None = None
) -> AnalysisResult:
    """Run the bundle's model over one plain-text document.

    ``trees`` must align 1:1 with the segmented sentences; it is only
    consulted by kernel models, which otherwise fall back to their embedded
    linear model with a warning.
    """
    sentences = segment_sentences(text)
    warnings: list[str] = []
    cfg = bundle.feature_config

    if trees is not None and len(trees) != len(sentences):
        raise TreeAlignmentError(
            f"document segments into {len(sentences)} sentences but {len(trees)} trees were supplied"
        )

    analyses: list[SentenceAnalysis] = []
    if bundle.kind == "linear-bow":
        model = linear_from_payload(bundle.payload)
        X = vectorize_all(sentences, trees, bundle.vocabulary, cfg)
        for sent, x in zip(sentences, X):
            score = svm.predict_linear(model, x)
            analyses.append(
                SentenceAnalysis(
                    text=sent.text,
                    start=sent.start,
                    end=sent.end,
                    detection=score >= 0.0,
                    scores={"detection": score},
                )
            )
    elif bundle.kind == "chain":
        model = chain_from_payload(bundle.payload)
        X = vectorize_all(sentences, trees, bundle.vocabulary, cfg)
        if X:
            ys, _ = viterbi(model, X)
        else:
            ys = []
        for sent, x, y in zip(sentences, X, ys):
            # informational only: emission-score gap, ignoring transitions
            margin = x.dot_dense(model.emissions[1]) - x.dot_dense(model.emissions[0])
            analyses.append(
                SentenceAnalysis(
                    text=sent.text,
                    start=sent.start,
                    end=sent.end,
                    detection=y == 1,
                    scores={"detection": margin},
                )
            )
    elif bundle.kind == "category-ovr":
        models = category_from_payload(bundle.payload)
        X = vectorize_all(sentences, trees, bundle.vocabulary, cfg)
        for sent, x in zip(sentences, X):
            scores = {cat.symbol: svm.predict_linear(m, x) for cat, m in models.items()}
            flagged = sorted(sym for sym, s in scores.items() if s >= 0.0)
            analyses.append(
                SentenceAnalysis(
                    text=sent.text,
                    start=sent.start,
                    end=sent.end,
                    detection=bool(flagged),
                    scores=scores,
                    categories=flagged,
                )
            )
    elif bundle.kind == "kernel-sstk":
        if trees is None:
            if bundle.fallback is None:
                raise ValueError("kernel model has no linear fallback and no trees were supplied")
            warnings.append("no parse trees supplied; fell back to the embedded linear model")
            model = linear_from_payload(bundle.fallback)
            X = vectorize_all(sentences, None, bundle.vocabulary, cfg)
            for sent, x in zip(sentences, X):
                score = svm.predict_linear(model, x)
                analyses.append(
                    SentenceAnalysis(
                        text=sent.text,
                        start=sent.start,
                        end=sent.end,
                        detection=score >= 0.0,
                        scores={"detection": score},
                    )
                )
        else:
            from .trees import parse_bracketed

            model, support_strs = kernel_from_payload(bundle.payload)
            support = [parse_bracketed(s) for s in support_strs]
            for sent, tree in zip(sentences, trees):
                row = treekernel.kernel_row(tree, support, lam=model.lam, normalize=model.normalized)
                score = svm.predict_kernel(model, row)
                analyses.append(
                    SentenceAnalysis(
                        text=sent.text,
                        start=sent.start,
                        end=sent.end,
                        detection=score >= 0.0,
                        scores={"detection": score},
                    )
                )
    else:  # pragma: no cover - ModelBundle validates kinds
        raise ValueError(f"unknown model kind {bundle.kind!r}")

    return AnalysisResult(
        text=text, model_kind=bundle.kind, sentences=analyses, warnings=warnings
    )


def result_record(result: AnalysisResult) -> dict:
    return {
        "model_kind": result.model_kind,
        "text": result.text,
        "warnings": result.warnings,
        "sentences": [
            {
                "text": s.text,
                "start": s.start,
                "end": s.end,
                "detection": s.detection,
                "scores": {k: float(v) for k, v in s.scores.items()},
                "categories": s.categories,
            }
            for s in result.sentences
        ],
    }


def result_json(result: AnalysisResult) -> bytes:
    return canonical_json_bytes(result_record(result))


def category_names(result: AnalysisResult) -> dict[str, str]:
    """Symbol -> display name map for the categories present in the result."""
    return {
        sym: CATEGORY_BY_SYMBOL[sym].display_name
        for s in result.sentences
        for sym in s.categories
    }
