"""SubSet Tree Kernel over constituency parse trees.

The kernel counts shared tree fragments that terminate either at leaves or at
non-terminal symbols, with a decay ``lam`` per expanded node:

    K(t1, t2) = sum over node pairs (n1, n2) of delta(n1, n2)

    delta = 0                       if production(n1) != production(n2)
    delta = lam                     if both nodes are preterminals
    delta = lam * prod_i (1 + delta(child_i(n1), child_i(n2)))   otherwise

Productions include the ordered child labels, so preterminals match only on
identical words.  ``enumerate_fragments_oracle`` provides an independent
exponential-time route used to verify the recursion.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .trees import ParseTree

#: Default decay; common practice for this kernel family.
DEFAULT_LAMBDA = 0.4


class InvalidLambda(ValueError):
    pass


class DegenerateTree(ValueError):
    """A tree whose self-kernel is zero (no internal nodes) cannot be normalized."""


class TooLarge(ValueError):
    """Fragment enumeration is exponential; refuse trees above the node bound."""


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam <= 1.0:
        raise InvalidLambda(f"lambda must be in (0, 1], got {lam}")


def sstk(t1: ParseTree, t2: ParseTree, lam: float = DEFAULT_LAMBDA) -> float:
    """Raw SubSet Tree Kernel value between two trees."""
    _check_lambda(lam)
    nodes1 = t1.internal_nodes()
    nodes2 = t2.internal_nodes()
    # productions are compared constantly; build each tuple once
    prod: dict[int, tuple] = {}
    for n in nodes1 + nodes2:
        prod[id(n)] = n.production()
    # group the second tree's nodes by production so only matching pairs are visited
    by_prod: dict[tuple, list[ParseTree]] = {}
    for n in nodes2:
        by_prod.setdefault(prod[id(n)], []).append(n)

    memo: dict[tuple[int, int], float] = {}

    def delta(a: ParseTree, b: ParseTree) -> float:
        if not a.children or not b.children:
            return 0.0
        if prod[id(a)] != prod[id(b)]:
            return 0.0
        key = (id(a), id(b))
        cached = memo.get(key)
        if cached is not None:
            return cached
        if a.is_preterminal and b.is_preterminal:
            value = lam
        else:
            value = lam
            for ca, cb in zip(a.children, b.children):
                value *= 1.0 + delta(ca, cb)
        memo[key] = value
        return value

    total = 0.0
    for n1 in nodes1:
        for n2 in by_prod.get(prod[id(n1)], ()):
            total += delta(n1, n2)
    return total


def sstk_normalized(t1: ParseTree, t2: ParseTree, lam: float = DEFAULT_LAMBDA) -> float:
    """Cosine-normalized kernel: K(t1,t2) / sqrt(K(t1,t1) * K(t2,t2))."""
    k11 = sstk(t1, t1, lam)
    k22 = sstk(t2, t2, lam)
    if k11 <= 0.0 or k22 <= 0.0:
        raise DegenerateTree("self-kernel is zero; tree has no internal nodes")
    return sstk(t1, t2, lam) / float(np.sqrt(k11 * k22))


@dataclass(frozen=True)
class KernelGram:
    matrix: np.ndarray
    lam: float
    normalized: bool

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


def gram_matrix(
    trees: Sequence[ParseTree], lam: float = DEFAULT_LAMBDA, normalize: bool = True
) -> KernelGram:
    """Pairwise kernel matrix, each unordered pair computed once."""
    _check_lambda(lam)
    n = len(trees)
    K = np.zeros((n, n), dtype=np.float64)
    diag = np.empty(n, dtype=np.float64)
    for i, t in enumerate(trees):
        diag[i] = sstk(t, t, lam)
        if normalize and diag[i] <= 0.0:
            raise DegenerateTree(f"tree {i} has zero self-kernel; cannot normalize")
    for i in range(n):
        K[i, i] = 1.0 if normalize else diag[i]
        for j in range(i + 1, n):
            value = sstk(trees[i], trees[j], lam)
            if normalize:
                value /= float(np.sqrt(diag[i] * diag[j]))
            K[i, j] = K[j, i] = value
    return KernelGram(matrix=K, lam=lam, normalized=normalize)


def kernel_row(
    tree: ParseTree, others: Sequence[ParseTree], lam: float = DEFAULT_LAMBDA, normalize: bool = True
) -> np.ndarray:
    """Kernel values of one tree against a list of trees."""
    _check_lambda(lam)
    row = np.empty(len(others), dtype=np.float64)
    if normalize:
        self_k = sstk(tree, tree, lam)
        if self_k <= 0.0:
            raise DegenerateTree("input tree has zero self-kernel; cannot normalize")
        for i, other in enumerate(others):
            other_k = sstk(other, other, lam)
            if other_k <= 0.0:
                raise DegenerateTree(f"tree {i} has zero self-kernel; cannot normalize")
            row[i] = sstk(tree, other, lam) / float(np.sqrt(self_k * other_k))
    else:
        for i, other in enumerate(others):
            row[i] = sstk(tree, other, lam)
    return row


# ---------------------------------------------------------------------------
# Exhaustive fragment oracle
# ---------------------------------------------------------------------------

def enumerate_fragments_oracle(tree: ParseTree, max_nodes: int = 16) -> Counter:
    """All kernel fragments of ``tree`` as canonical bracketed strings.

    A fragment is rooted at any internal node; at each included internal node
    either all children are included or none (the node then terminates the
    fragment as a bare non-terminal).  Expanded preterminals include their
    word.  The multiset counts duplicate fragments separately.
    """
    if tree.n_nodes() > max_nodes:
        raise TooLarge(f"tree has {tree.n_nodes()} nodes; oracle bound is {max_nodes}")
    fragments: Counter = Counter()
    for node in tree.internal_nodes():
        fragments.update(_expansions(node))
    return fragments


def _expansions(node: ParseTree) -> list[str]:
    """All fragment strings rooted at ``node`` with ``node`` expanded."""
    per_child: list[list[str]] = []
    for child in node.children:
        if child.is_leaf:
            per_child.append([child.label])
        else:
            per_child.append([child.label] + _expansions(child))
    return [
        "(" + node.label + " " + " ".join(combo) + ")"
        for combo in product(*per_child)
    ]


def random_tree(
    rng,
    max_nodes: int = 12,
    labels: Sequence[str] = ("A", "B", "C"),
    words: Sequence[str] = ("x", "y", "z"),
) -> ParseTree:
    """Small random tree over a tight alphabet (for self-tests).

    ``rng`` is a ``random.Random``; the tight alphabet makes shared
    productions, and hence nonzero kernel values, likely.
    """

    def build(budget: int) -> tuple[ParseTree, int]:
        if budget < 4 or rng.random() < 0.4:
            return ParseTree(rng.choice(labels), [ParseTree(rng.choice(words))]), 2
        used = 1
        kids: list[ParseTree] = []
        for _ in range(rng.randint(1, 3)):
            if budget - used < 2:
                break
            child, child_used = build(budget - used)
            kids.append(child)
            used += child_used
        if not kids:
            return ParseTree(rng.choice(labels), [ParseTree(rng.choice(words))]), 2
        return ParseTree(rng.choice(labels), kids), used

    tree, _ = build(max(max_nodes, 2))
    return tree


def fragment_pair_kernel(
    t1: ParseTree, t2: ParseTree, lam: float = 1.0, max_nodes: int = 16
) -> float:
    """Kernel value computed from explicit fragment enumeration.

    Each matching fragment pair contributes lam ** (number of expanded nodes
    in the fragment); the expansion count equals the number of '(' in the
    canonical string.  At lam = 1 this is the integer count of matching pairs.
    """
    _check_lambda(lam)
    f1 = enumerate_fragments_oracle(t1, max_nodes)
    f2 = enumerate_fragments_oracle(t2, max_nodes)
    total = 0.0
    for frag, c1 in f1.items():
        c2 = f2.get(frag)
        if c2:
            total += c1 * c2 * lam ** frag.count("(")
    return total
