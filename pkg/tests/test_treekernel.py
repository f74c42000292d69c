from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claudette.treekernel import (
    DegenerateTree,
    InvalidLambda,
    TooLarge,
    enumerate_fragments_oracle,
    fragment_pair_kernel,
    gram_matrix,
    kernel_row,
    random_tree,
    sstk,
    sstk_normalized,
)
from claudette.trees import ParseTree, parse_bracketed

T = parse_bracketed("(S (A a) (B b))")
T_DISJOINT = parse_bracketed("(S (C c) (D d))")
T_HALF = parse_bracketed("(S (A a) (D d))")


class TestSstk:
    def test_self_kernel_lambda_one_counts_fragments(self):
        assert sstk(T, T, 1.0) == 6.0

    def test_self_kernel_decayed(self):
        # 0.5 + 0.5 + 0.5 * 1.5 * 1.5
        assert sstk(T, T, 0.5) == pytest.approx(2.125, abs=1e-12)

    def test_disjoint_productions_zero(self):
        for lam in (1.0, 0.5, 0.4):
            assert sstk(T, T_DISJOINT, lam) == 0.0

    def test_shared_preterminal_only(self):
        # root productions S->A B vs S->A D differ; only (A a) matches
        assert sstk(T, T_HALF, 1.0) == 1.0

    def test_symmetry_exact(self):
        rng = random.Random(5)
        for _ in range(30):
            t1 = random_tree(rng, max_nodes=12)
            t2 = random_tree(rng, max_nodes=12)
            assert sstk(t1, t2, 0.4) == sstk(t2, t1, 0.4)

    def test_invalid_lambda(self):
        for lam in (0.0, -0.1, 1.5):
            with pytest.raises(InvalidLambda):
                sstk(T, T, lam)

    def test_monotone_in_lambda(self):
        rng = random.Random(11)
        for _ in range(20):
            t1 = random_tree(rng, max_nodes=12)
            t2 = random_tree(rng, max_nodes=12)
            values = [sstk(t1, t2, lam) for lam in (0.1, 0.4, 0.7, 1.0)]
            assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_preterminal_words_must_match(self):
        t1 = parse_bracketed("(A a)")
        t2 = parse_bracketed("(A b)")
        assert sstk(t1, t2, 1.0) == 0.0
        assert sstk(t1, t1, 1.0) == 1.0


class TestNormalized:
    def test_identical_trees(self):
        assert sstk_normalized(T, T, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_trees(self):
        assert sstk_normalized(T, T_DISJOINT, 0.4) == 0.0

    def test_one_sixth_case(self):
        assert sstk_normalized(T, T_HALF, 1.0) == pytest.approx(1 / 6, abs=1e-12)

    def test_degenerate_tree(self):
        leaf_only = ParseTree("a")
        with pytest.raises(DegenerateTree):
            sstk_normalized(leaf_only, T, 1.0)


class TestFragmentOracle:
    def test_single_preterminal(self):
        assert dict(enumerate_fragments_oracle(parse_bracketed("(A a)"))) == {"(A a)": 1}

    def test_six_fragments(self):
        frags = enumerate_fragments_oracle(T)
        assert sorted(frags) == [
            "(A a)",
            "(B b)",
            "(S (A a) (B b))",
            "(S (A a) B)",
            "(S A (B b))",
            "(S A B)",
        ]
        assert sum(frags.values()) == 6

    def test_duplicate_fragments_counted(self):
        tree = parse_bracketed("(S (A a) (A a))")
        frags = enumerate_fragments_oracle(tree)
        assert frags["(A a)"] == 2

    def test_too_large(self):
        rng = random.Random(0)
        big = random_tree(rng, max_nodes=40)
        while big.n_nodes() <= 16:
            big = random_tree(rng, max_nodes=40)
        with pytest.raises(TooLarge):
            enumerate_fragments_oracle(big)

    def test_oracle_equivalence_exact_at_lambda_one(self):
        rng = random.Random(42)
        for _ in range(60):
            t1 = random_tree(rng, max_nodes=12)
            t2 = random_tree(rng, max_nodes=12)
            fast = sstk(t1, t2, 1.0)
            oracle = fragment_pair_kernel(t1, t2, 1.0)
            assert fast == oracle  # both integer-valued

    def test_oracle_equivalence_decayed(self):
        rng = random.Random(43)
        for _ in range(60):
            t1 = random_tree(rng, max_nodes=12)
            t2 = random_tree(rng, max_nodes=12)
            for lam in (0.5, 0.4):
                assert sstk(t1, t2, lam) == pytest.approx(
                    fragment_pair_kernel(t1, t2, lam), abs=1e-9
                )


class TestGramMatrix:
    def test_single_tree(self):
        gram = gram_matrix([T], lam=1.0, normalize=False)
        assert gram.matrix.shape == (1, 1)
        assert gram.matrix[0, 0] == 6.0
        gram_n = gram_matrix([T], lam=1.0, normalize=True)
        assert gram_n.matrix[0, 0] == pytest.approx(1.0)

    def test_identical_trees_all_equal(self):
        gram = gram_matrix([T, T], lam=0.4, normalize=False)
        assert np.all(gram.matrix == gram.matrix[0, 0])

    def test_matches_pairwise_oracle(self):
        rng = random.Random(9)
        trees = [random_tree(rng, max_nodes=10) for _ in range(10)]
        gram = gram_matrix(trees, lam=0.4, normalize=False)
        for i in range(10):
            for j in range(10):
                assert gram.matrix[i, j] == pytest.approx(
                    fragment_pair_kernel(trees[i], trees[j], 0.4), abs=1e-9
                )

    def test_normalized_diagonal_and_symmetry(self):
        rng = random.Random(13)
        trees = [random_tree(rng, max_nodes=12) for _ in range(8)]
        gram = gram_matrix(trees, lam=0.4, normalize=True)
        assert np.allclose(gram.matrix, gram.matrix.T, atol=1e-9)
        assert np.allclose(np.diag(gram.matrix), 1.0, atol=1e-9)
        assert np.all(gram.matrix <= 1.0 + 1e-9)

    def test_psd_spot_check(self):
        rng = random.Random(17)
        for _ in range(3):
            trees = [random_tree(rng, max_nodes=12) for _ in range(15)]
            gram = gram_matrix(trees, lam=0.4, normalize=True)
            eigenvalues = np.linalg.eigvalsh(gram.matrix)
            assert eigenvalues.min() >= -1e-8

    def test_degenerate_tree_reports_index(self):
        with pytest.raises(DegenerateTree) as err:
            gram_matrix([T, ParseTree("lonely")], lam=0.4, normalize=True)
        assert "1" in str(err.value)

    def test_kernel_row_matches_gram(self):
        rng = random.Random(21)
        trees = [random_tree(rng, max_nodes=10) for _ in range(6)]
        gram = gram_matrix(trees, lam=0.4, normalize=True)
        row = kernel_row(trees[2], trees, lam=0.4, normalize=True)
        assert np.allclose(row, gram.matrix[2], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_oracle_equivalence_property(seed):
    rng = random.Random(seed)
    t1 = random_tree(rng, max_nodes=10)
    t2 = random_tree(rng, max_nodes=10)
    assert sstk(t1, t2, 1.0) == fragment_pair_kernel(t1, t2, 1.0)
    assert sstk(t1, t2, 0.4) == pytest.approx(fragment_pair_kernel(t1, t2, 0.4), abs=1e-9)
