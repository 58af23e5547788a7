import numpy as np
import pytest

from dppanswer.baselines import (
    external_ranking_k,
    lexrank_k,
    lexrank_scores,
    random_k,
    top_k,
    word_counts,
    wordnum_k,
)
from conftest import make_instance


def words(*counts):
    return make_instance([" ".join(f"w{i}x{j}" for j in range(c)) for i, c in enumerate(counts)])


def dense_lexrank(adj, damping):
    """Principal eigenvector of the full surfer matrix, via numpy's eigensolver."""
    n = adj.shape[0]
    deg = adj.sum(axis=1)
    trans = adj / np.maximum(deg, 1.0)[:, None]
    g = (1 - damping) / n * np.ones((n, n)) + damping * trans
    w, v = np.linalg.eig(g.T)
    p = np.abs(np.real(v[:, np.argmax(np.real(w))]))
    return p / p.sum()


class TestTopK:
    def test_ties_favour_lower_index(self):
        assert top_k([1.0, 3.0, 3.0, 2.0], 2) == (1, 2)
        assert top_k([5.0, 5.0], 1) == (0,)


class TestRandom:
    def test_exhaustion(self):
        assert random_k(words(1, 2, 3, 4, 5), 5, seed=0) == (0, 1, 2, 3, 4)

    def test_single(self):
        assert random_k(words(3), 1, seed=9) == (0,)

    def test_reproducible(self):
        inst = words(1, 2, 3, 4, 5, 6)
        assert random_k(inst, 2, seed=4) == random_k(inst, 2, seed=4)

    def test_frequencies_uniform(self):
        n = 5
        counts = np.zeros(n)
        draws = 10_000
        for s in range(draws):
            counts[list(random_k(words(*range(1, n + 1)), 1, seed=s))] += 1
        np.testing.assert_allclose(counts / draws, 1 / n, atol=0.02)

    @pytest.mark.parametrize("k", [0, 4])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            random_k(words(1, 2, 3), k)


class TestWordnum:
    def test_longest(self):
        assert wordnum_k(words(3, 10, 2), 1) == (1,)

    def test_tie(self):
        assert wordnum_k(words(5, 5), 1) == (0,)

    def test_top_two(self):
        assert wordnum_k(words(3, 10, 2), 2) == (0, 1)

    def test_counts_use_tokenizer(self):
        np.testing.assert_array_equal(word_counts(make_instance(["A b, c!", ""])), [3, 0])

    def test_permutation_equivariant(self):
        a = words(4, 9, 1, 7)
        b = words(7, 1, 9, 4)
        perm = [3, 2, 1, 0]
        assert sorted(perm[i] for i in wordnum_k(a, 2)) == list(wordnum_k(b, 2))


class TestLexRank:
    def test_identical_answers_uniform(self):
        s = lexrank_scores(make_instance(["same words here"] * 4))
        np.testing.assert_allclose(s, 0.25, atol=1e-12)

    def test_disjoint_uniform(self):
        s = lexrank_scores(make_instance(["apples oranges", "trucks boats"]))
        np.testing.assert_allclose(s, 0.5)

    def test_hub_matches_dense_oracle(self):
        inst = make_instance([
            "cats dogs birds fish",
            "cats purr",
            "dogs bark",
            "birds sing",
        ])
        s = lexrank_scores(inst)
        assert int(np.argmax(s)) == 0
        adj = np.zeros((4, 4))
        adj[0, 1:] = adj[1:, 0] = 1.0
        np.testing.assert_allclose(s, dense_lexrank(adj, 0.85), atol=1e-6)

    def test_isolated_node_gets_jump_mass_only(self):
        inst = make_instance(["red green", "red green blue", "violet"])
        s = lexrank_scores(inst)
        adj = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
        np.testing.assert_allclose(s, dense_lexrank(adj, 0.85), atol=1e-6)
        assert s[2] < s[0]

    def test_sums_to_one(self, rng):
        vocab = [f"t{i}" for i in range(8)]
        for _ in range(20):
            texts = [" ".join(rng.choice(vocab, size=int(rng.integers(1, 6)))) for _ in range(int(rng.integers(1, 8)))]
            s = lexrank_scores(make_instance(texts))
            assert abs(s.sum() - 1.0) <= 1e-9 and np.all(s >= 0)

    def test_select(self):
        inst = make_instance(["cats dogs birds fish", "cats purr", "dogs bark", "birds sing"])
        assert lexrank_k(inst, 1) == (0,)


class TestExternal:
    def test_top_one(self):
        assert external_ranking_k(words(1, 1), {"a1": 0.9, "a2": 0.1}, 1) == (0,)

    def test_missing_score(self):
        with pytest.raises(KeyError):
            external_ranking_k(words(1, 1), {"a1": 0.9}, 1)

    def test_all(self):
        assert external_ranking_k(words(1, 1), {"a1": 0.2, "a2": 0.1}, 2) == (0, 1)
