"""Unified model container with canonical JSON serialization.

All four model kinds share one versioned file format holding the feature
config, the vocabulary, the kind-specific payload, and training metadata.
Serialization is canonical (sorted keys, fixed separators, shortest float
repr), so loading a file and saving it again is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import ClauseCategory
from .features import FeatureConfig, Vocabulary
from .seqmodel import ChainModel
from .svm import KernelModel, LinearModel, TrainConfig

FORMAT_VERSION = 1
MODEL_KINDS = ("linear-bow", "kernel-sstk", "chain", "category-ovr")


class ModelFormatError(ValueError):
    pass


def canonical_json_bytes(obj) -> bytes:
    return (
        json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
        + "\n"
    ).encode("utf-8")


def _finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ModelFormatError("model contains a non-finite value")
    return x


# ---------------------------------------------------------------------------
# Component records
# ---------------------------------------------------------------------------

def feature_config_record(cfg: FeatureConfig) -> dict:
    return {
        "ngram_orders": list(cfg.ngram_orders),
        "use_pos": cfg.use_pos,
        "min_df": cfg.min_df,
        "lowercase": cfg.lowercase,
        "log_tf": cfg.log_tf,
    }


def feature_config_from_record(rec: dict) -> FeatureConfig:
    return FeatureConfig(
        ngram_orders=tuple(rec["ngram_orders"]),
        use_pos=rec["use_pos"],
        min_df=rec["min_df"],
        lowercase=rec["lowercase"],
        log_tf=rec["log_tf"],
    )


def train_config_record(cfg: TrainConfig) -> dict:
    return {
        "C": cfg.C,
        "positive_weight": cfg.positive_weight,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
    }


def train_config_from_record(rec: dict) -> TrainConfig:
    return TrainConfig(
        C=rec["C"],
        positive_weight=rec["positive_weight"],
        tol=rec["tol"],
        max_iter=rec["max_iter"],
        seed=rec["seed"],
        epochs=rec["epochs"],
    )


def vocabulary_record(vocab: Vocabulary) -> dict:
    return {
        "format_version": 1,
        "entries": [
            [term, i, df] for i, (term, df) in enumerate(zip(vocab.terms, vocab.df))
        ],
        "n_fit": vocab.n_fit,
    }


def vocabulary_from_record(rec: dict) -> Vocabulary:
    if rec.get("format_version") != 1:
        raise ModelFormatError(f"unsupported vocabulary format {rec.get('format_version')!r}")
    entries = sorted(rec["entries"], key=lambda e: e[1])
    return Vocabulary(
        terms=[e[0] for e in entries],
        df=[e[2] for e in entries],
        n_fit=rec["n_fit"],
    )


def linear_payload(model: LinearModel) -> dict:
    nz = np.flatnonzero(model.w)
    return {
        "kind": "linear",
        "dim": model.dim,
        "w": [[int(i), _finite(model.w[i])] for i in nz],
        "b": _finite(model.b),
        "warning": model.warning,
    }


def linear_from_payload(payload: dict) -> LinearModel:
    w = np.zeros(payload["dim"], dtype=np.float64)
    for i, v in payload["w"]:
        w[i] = v
    return LinearModel(w=w, b=float(payload["b"]), warning=payload.get("warning"))


def kernel_payload(model: KernelModel, support_trees: list[str]) -> dict:
    if len(support_trees) != model.n_support:
        raise ModelFormatError("support tree list does not match the support set")
    return {
        "kind": "kernel",
        "support_idx": [int(i) for i in model.support_idx],
        "coef": [_finite(c) for c in model.coef],
        "b": _finite(model.b),
        "lambda": _finite(model.lam),
        "normalized": model.normalized,
        "n_train": model.n_train,
        "kkt_violation": _finite(model.kkt_violation),
        "warning": model.warning,
        "support_trees": list(support_trees),
    }


def kernel_from_payload(payload: dict) -> tuple[KernelModel, list[str]]:
    model = KernelModel(
        support_idx=np.asarray(payload["support_idx"], dtype=np.int64),
        coef=np.asarray(payload["coef"], dtype=np.float64),
        b=float(payload["b"]),
        lam=float(payload["lambda"]),
        normalized=payload["normalized"],
        n_train=payload["n_train"],
        kkt_violation=float(payload["kkt_violation"]),
        warning=payload.get("warning"),
    )
    return model, list(payload["support_trees"])


def chain_payload(model: ChainModel) -> dict:
    emissions = []
    for row in model.emissions:
        nz = np.flatnonzero(row)
        emissions.append([[int(i), _finite(row[i])] for i in nz])
    return {
        "kind": "chain",
        "labels": list(model.labels),
        "dim": model.dim,
        "emissions": emissions,
        "transitions": [[_finite(v) for v in row] for row in model.transitions],
        "start": [_finite(v) for v in model.start],
    }


def chain_from_payload(payload: dict) -> ChainModel:
    L = len(payload["labels"])
    emissions = np.zeros((L, payload["dim"]), dtype=np.float64)
    for row_idx, row in enumerate(payload["emissions"]):
        for i, v in row:
            emissions[row_idx, i] = v
    return ChainModel(
        labels=tuple(payload["labels"]),
        emissions=emissions,
        transitions=np.asarray(payload["transitions"], dtype=np.float64),
        start=np.asarray(payload["start"], dtype=np.float64),
    )


def category_payload(models: dict[ClauseCategory, LinearModel]) -> dict:
    return {
        "kind": "category-ovr",
        "models": {cat.symbol: linear_payload(m) for cat, m in models.items()},
    }


def category_from_payload(payload: dict) -> dict[ClauseCategory, LinearModel]:
    from .corpus import CATEGORY_BY_SYMBOL

    return {
        CATEGORY_BY_SYMBOL[sym]: linear_from_payload(p)
        for sym, p in payload["models"].items()
    }


_PAYLOAD_KIND_FOR = {
    "linear-bow": "linear",
    "kernel-sstk": "kernel",
    "chain": "chain",
    "category-ovr": "category-ovr",
}


# ---------------------------------------------------------------------------
# The unified model file
# ---------------------------------------------------------------------------

@dataclass
class ModelBundle:
    kind: str
    feature_config: FeatureConfig
    vocabulary: Vocabulary
    payload: dict
    metadata: dict = field(default_factory=dict)
    # present only for kernel-sstk: a linear fallback used when no tree is available
    fallback: dict | None = None

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ModelFormatError(f"unknown model kind {self.kind!r}")
        expected = _PAYLOAD_KIND_FOR[self.kind]
        if self.payload.get("kind") != expected:
            raise ModelFormatError(
                f"payload kind {self.payload.get('kind')!r} does not match model kind {self.kind!r}"
            )

    def to_record(self) -> dict:
        rec = {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "feature_config": feature_config_record(self.feature_config),
            "vocabulary": vocabulary_record(self.vocabulary),
            "payload": self.payload,
            "metadata": self.metadata,
        }
        if self.fallback is not None:
            rec["fallback"] = self.fallback
        return rec


def save_model(bundle: ModelBundle, path: str | Path) -> None:
    Path(path).write_bytes(canonical_json_bytes(bundle.to_record()))


def load_model(path: str | Path) -> ModelBundle:
    try:
        rec = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"not a model file: {err}") from None
    if not isinstance(rec, dict) or "format_version" not in rec:
        raise ModelFormatError("not a model file: missing format_version")
    if rec["format_version"] != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {rec['format_version']} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    return ModelBundle(
        kind=rec["kind"],
        feature_config=feature_config_from_record(rec["feature_config"]),
        vocabulary=vocabulary_from_record(rec["vocabulary"]),
        payload=rec["payload"],
        metadata=rec.get("metadata", {}),
        fallback=rec.get("fallback"),
    )
