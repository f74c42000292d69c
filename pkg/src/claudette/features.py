"""Sparse TF-IDF sentence representations over word n-grams and POS tags.

The "document" unit for document frequency is the sentence, since the
classification unit is the sentence.  Term namespaces keep word n-grams
("w1:", "w2:", ...) and POS tags ("p:") from colliding in one vocabulary.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .trees import ParseTree


class MissingTree(ValueError):
    """POS features were requested but a sentence has no parse tree."""


@dataclass(frozen=True)
class FeatureConfig:
    ngram_orders: tuple[int, ...] = (1, 2)
    use_pos: bool = False
    min_df: int = 1
    lowercase: bool = True
    log_tf: bool = False

    def __post_init__(self) -> None:
        orders = tuple(sorted(set(self.ngram_orders)))
        if not orders or any(n < 1 for n in orders):
            raise ValueError("ngram_orders must be a non-empty set of integers >= 1")
        object.__setattr__(self, "ngram_orders", orders)
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")


class SparseVector:
    """Sorted (index, weight) pairs with an explicit dimension."""

    __slots__ = ("indices", "values", "dim")

    def __init__(self, indices: Sequence[int], values: Sequence[float], dim: int):
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(values, dtype=np.float64)
        if idx.shape != vals.shape:
            raise ValueError("indices and values must have equal length")
        if idx.size and (np.any(idx[:-1] >= idx[1:]) or idx[0] < 0 or idx[-1] >= dim):
            raise ValueError("indices must be strictly increasing and within [0, dim)")
        self.indices = idx
        self.values = vals
        self.dim = dim

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dim: int) -> "SparseVector":
        items = sorted((i, w) for i, w in pairs if w != 0.0)
        return cls([i for i, _ in items], [w for _, w in items], dim)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def items(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def dot_dense(self, w: np.ndarray) -> float:
        if w.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: vector dim {self.dim}, weights {w.shape[0]}")
        if not self.indices.size:
            return 0.0
        return float(np.dot(w[self.indices], self.values))

    def dot(self, other: "SparseVector") -> float:
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        i = j = 0
        total = 0.0
        a_idx, a_val, b_idx, b_val = self.indices, self.values, other.indices, other.values
        while i < a_idx.size and j < b_idx.size:
            ai, bj = a_idx[i], b_idx[j]
            if ai == bj:
                total += a_val[i] * b_val[j]
                i += 1
                j += 1
            elif ai < bj:
                i += 1
            else:
                j += 1
        return total

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SparseVector)
            and self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"SparseVector(nnz={self.nnz}, dim={self.dim})"


class Vocabulary:
    """Immutable term -> dense index map with per-term document frequencies.

    Indices are assigned in lexicographic term order so the mapping does not
    depend on input ordering.
    """

    def __init__(self, terms: Sequence[str], df: Sequence[int], n_fit: int):
        if len(terms) != len(df):
            raise ValueError("terms and df must align")
        if list(terms) != sorted(terms):
            raise ValueError("terms must be lexicographically sorted")
        self.terms = tuple(terms)
        self.df = tuple(int(d) for d in df)
        self.n_fit = int(n_fit)
        self._index = {t: i for i, t in enumerate(self.terms)}
        self._idf = np.array(
            [math.log((1.0 + self.n_fit) / (1.0 + d)) + 1.0 for d in self.df], dtype=np.float64
        )

    @property
    def size(self) -> int:
        return len(self.terms)

    def index(self, term: str) -> int | None:
        return self._index.get(term)

    def idf(self, term: str) -> float:
        i = self._index.get(term)
        if i is None:
            raise KeyError(term)
        return float(self._idf[i])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.terms == other.terms
            and self.df == other.df
            and self.n_fit == other.n_fit
        )

    def __len__(self) -> int:
        return len(self.terms)


def extract_ngrams(tokens: Sequence[str], n: int) -> list[str]:
    """Consecutive n-token windows, underscore-joined and namespaced "w{n}:"."""
    if n < 1:
        raise ValueError("n must be >= 1")
    prefix = f"w{n}:"
    return [prefix + "_".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def pos_bag(tree: ParseTree) -> list[str]:
    """Preterminal labels in left-to-right order, namespaced "p:"."""
    return ["p:" + node.label for node in tree.preterminals()]


def _tokens_of(sentence) -> Sequence[str]:
    if hasattr(sentence, "sentence"):  # LabeledSentence
        return sentence.sentence.tokens
    if hasattr(sentence, "tokens"):  # Sentence
        return sentence.tokens
    return sentence  # raw token sequence


def extract_terms(sentence, tree: ParseTree | None, config: FeatureConfig) -> list[str]:
    """All feature terms of one sentence under ``config`` (duplicates kept)."""
    tokens = _tokens_of(sentence)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    terms: list[str] = []
    for n in config.ngram_orders:
        terms.extend(extract_ngrams(tokens, n))
    if config.use_pos:
        if tree is None:
            raise MissingTree("POS features enabled but no parse tree supplied")
        terms.extend(pos_bag(tree))
    return terms


def build_vocabulary(
    sentences: Sequence,
    trees: Sequence[ParseTree | None] | None,
    config: FeatureConfig,
) -> Vocabulary:
    """Collect every term with sentence-level document frequency >= min_df."""
    if config.use_pos and trees is None:
        raise MissingTree("POS features enabled but no trees supplied")
    df: Counter[str] = Counter()
    for i, sentence in enumerate(sentences):
        tree = trees[i] if trees is not None else None
        df.update(set(extract_terms(sentence, tree, config)))
    kept = sorted(t for t, d in df.items() if d >= config.min_df)
    return Vocabulary(kept, [df[t] for t in kept], n_fit=len(sentences))


def vectorize(
    sentence,
    tree: ParseTree | None,
    vocab: Vocabulary,
    config: FeatureConfig,
) -> SparseVector:
    """L2-normalized TF-IDF vector of one sentence.

    weight(t) = tf(t) * (ln((1 + N_fit) / (1 + df(t))) + 1), with raw-count tf
    by default or 1 + ln(count) when ``config.log_tf`` is set.  Terms outside
    the vocabulary are ignored; an all-zero vector stays all-zero.
    """
    counts = Counter(extract_terms(sentence, tree, config))
    pairs: list[tuple[int, float]] = []
    for term, count in counts.items():
        idx = vocab.index(term)
        if idx is None:
            continue
        tf = 1.0 + math.log(count) if config.log_tf else float(count)
        pairs.append((idx, tf * float(vocab._idf[idx])))
    vec = SparseVector.from_pairs(pairs, dim=vocab.size)
    nrm = vec.norm()
    if nrm > 0.0:
        vec = SparseVector(vec.indices, vec.values / nrm, vec.dim)
    return vec


def vectorize_all(
    sentences: Sequence,
    trees: Sequence[ParseTree | None] | None,
    vocab: Vocabulary,
    config: FeatureConfig,
) -> list[SparseVector]:
    if config.use_pos and trees is None:
        raise MissingTree("POS features enabled but no trees supplied")
    out = []
    for i, sentence in enumerate(sentences):
        tree = trees[i] if trees is not None else None
        out.append(vectorize(sentence, tree, vocab, config))
    return out
