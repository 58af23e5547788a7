import json

import numpy as np
import pytest

from dppanswer import dpp
from dppanswer.features import FeaturePipeline, build_stats
from dppanswer.kernel import project_psd_backward
from dppanswer.scorer import (
    CLAMP,
    Model,
    SchemaError,
    ScorerParams,
    backward,
    forward,
    importance,
    score_instance,
    similarity,
)
from dppanswer.training import kernel_for
from conftest import finite_difference_gradient, make_instance, max_relative_error, random_features


def oracle_head(head, x):
    """Perceptron forward written out with explicit loops."""
    out = []
    for row in np.atleast_2d(x):
        hidden = [np.tanh(sum(row[i] * head.W1[i, k] for i in range(len(row))) + head.b1[k]) for k in range(head.hidden)]
        out.append(sum(hk * head.w2[k] for k, hk in enumerate(hidden)) + head.b2[0])
    return np.array(out)


class TestHeads:
    def test_zero_importance_is_one(self, rng):
        p = ScorerParams.zeros(4)
        np.testing.assert_array_equal(importance(p, rng.normal(size=(3, 4))), 1.0)

    def test_importance_clamp(self):
        p = ScorerParams.zeros(4)
        p.imp_head.b2[0] = 1000.0
        assert importance(p, np.zeros(4))[()] == pytest.approx(np.exp(CLAMP))

    def test_zero_similarity_is_half(self, rng):
        p = ScorerParams.zeros(4)
        np.testing.assert_array_equal(similarity(p, rng.normal(size=(5, 4))), 0.5)

    def test_similarity_strictly_positive(self):
        p = ScorerParams.zeros(4)
        p.sim_head.b2[0] = -1000.0
        s = similarity(p, np.zeros(4))
        assert 0.0 < s <= 1e-9

    def test_forward_oracle(self, rng):
        p = ScorerParams.init(4, seed=3)
        x = rng.normal(size=(6, 4))
        np.testing.assert_allclose(importance(p, x), np.exp(oracle_head(p.imp_head, x)), rtol=1e-12)
        np.testing.assert_allclose(similarity(p, x), 1 / (1 + np.exp(-oracle_head(p.sim_head, x))), rtol=1e-12)

    def test_schema_mismatch(self):
        p = ScorerParams.init(4, seed=0)
        with pytest.raises(SchemaError):
            importance(p, np.zeros(5))
        with pytest.raises(SchemaError):
            importance(p, np.zeros(4), schema="answer-v1+question")
        with pytest.raises(ValueError):
            importance(p, np.array([np.nan, 0, 0, 0]))


class TestScoreInstance:
    def test_single_answer(self):
        inst = make_instance(["just one"])
        imp, sim = score_instance(ScorerParams.init(4, seed=0), inst, build_stats([inst]))
        assert imp.shape == (1,)
        np.testing.assert_array_equal(sim, [[1.0]])

    def test_shapes_and_ranges(self):
        inst = make_instance(["a b c", "c d", "e f g h", "a"])
        imp, sim = score_instance(ScorerParams.init(4, seed=1), inst, build_stats([inst]))
        assert np.all(imp > 0)
        np.testing.assert_array_equal(sim, sim.T)
        np.testing.assert_array_equal(np.diag(sim), 1.0)
        off = sim[~np.eye(4, dtype=bool)]
        assert np.all((off > 0) & (off < 1))

    def test_duplicate_answers(self):
        inst = make_instance(["red fox runs", "red fox runs", "blue whale"])
        stats = build_stats([inst])
        p = ScorerParams.init(4, seed=2)
        _, sim = score_instance(p, inst, stats)
        ident = make_instance(["red fox runs", "red fox runs"])
        _, sim2 = score_instance(p, ident, stats)
        assert sim[0, 1] == sim2[0, 1]

    def test_cold_start_kernel(self):
        a = make_instance(["x y", "z", "w w w"])
        b = make_instance(["completely", "different texts here", "q"])
        for inst in (a, b):
            imp, sim = score_instance(ScorerParams.zeros(4), inst, build_stats([inst]))
            np.testing.assert_array_equal(imp, 1.0)
            np.testing.assert_array_equal(sim, np.full((3, 3), 0.5) + 0.5 * np.eye(3))

    def test_empty_instance_rejected(self):
        with pytest.raises(ValueError):
            score_instance(ScorerParams.zeros(4), make_instance([]), build_stats([]))


class TestBackward:
    def test_zero_dl(self, rng):
        p = ScorerParams.init(4, seed=0)
        cache = forward(p, random_features(rng, 3))
        g = backward(p, cache, np.zeros((3, 3)))
        np.testing.assert_array_equal(g.to_vector(), 0.0)

    def test_single_answer_only_imp_head(self, rng):
        p = ScorerParams.init(4, seed=0)
        feats = random_features(rng, 1)
        cache, k = kernel_for(p, feats, 1e-6)
        g = backward(p, cache, dpp.nll_grad_L(k, [0]))
        assert np.any(g.imp_head.W1 != 0)
        for a in g.sim_head.arrays():
            np.testing.assert_array_equal(a, 0.0)

    def test_mismatched_shape(self, rng):
        p = ScorerParams.init(4, seed=0)
        cache = forward(p, random_features(rng, 3))
        with pytest.raises(ValueError):
            backward(p, cache, np.zeros((2, 2)))

    def test_kernel_gradient_formula(self, rng):
        """d/d imp and d/d sim from the product rule, checked on a dense dL."""
        p = ScorerParams.init(4, seed=0)
        cache = forward(p, random_features(rng, 4))
        dL = rng.normal(size=(4, 4))
        dL = 0.5 * (dL + dL.T)
        imp, sim = cache.imp, cache.sim
        expected = np.array([sum(2 * dL[i, j] * imp[j] * sim[i, j] for j in range(4)) for i in range(4)])
        np.testing.assert_allclose(2 * (dL * sim) @ imp, expected)

    def test_end_to_end_finite_differences(self, rng):
        for n in (2, 3, 4, 5):
            p = ScorerParams.init(4, seed=n)
            feats = random_features(rng, n)
            gold = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
            cache, k = kernel_for(p, feats, 1e-6)
            assert not k.repaired
            g = backward(p, cache, project_psd_backward(k, dpp.nll_grad_L(k, gold))).to_vector()
            fd = finite_difference_gradient(p, feats, gold)
            assert max_relative_error(g, fd) <= 1e-4

    def test_repaired_path_finite_differences(self, rng):
        """The exact projection gradient also matches once eigenvalues get clamped."""
        checked = 0
        for seed in range(200):
            p = ScorerParams.init(4, seed=seed)
            p.sim_head.w2 *= 60.0
            feats = random_features(rng, 4)
            cache, k = kernel_for(p, feats, 1e-6)
            if not k.repaired or np.min(np.abs(k.eig[0] - 1e-6)) < 1e-3:
                continue
            g = backward(p, cache, project_psd_backward(k, dpp.nll_grad_L(k, [0, 2]))).to_vector()
            fd = finite_difference_gradient(p, feats, [0, 2])
            assert max_relative_error(g, fd) <= 1e-3
            checked += 1
            if checked == 3:
                break
        assert checked == 3


class TestSerialization:
    def test_params_round_trip(self):
        p = ScorerParams.init(6, seed=4, hidden=5, answer_schema="answer-v1+question")
        q = ScorerParams.from_dict(json.loads(json.dumps(p.to_dict())))
        np.testing.assert_array_equal(q.to_vector(), p.to_vector())
        assert q.imp_head.schema == "answer-v1+question"

    def test_with_vector_length_checked(self):
        p = ScorerParams.init(4, seed=0)
        with pytest.raises(ValueError):
            p.with_vector(np.zeros(p.to_vector().size + 1))

    def test_model_round_trip(self, tmp_path):
        m = Model(ScorerParams.init(4, seed=0), FeaturePipeline.unfitted(), {"seed": 0})
        m.save(tmp_path / "m.json")
        back = Model.load(tmp_path / "m.json")
        np.testing.assert_array_equal(back.params.to_vector(), m.params.to_vector())
        assert back.meta == {"seed": 0}

    def test_model_schema_mismatch(self):
        d = Model(ScorerParams.init(4, seed=0), FeaturePipeline.unfitted(), {}).to_dict()
        d["features"]["include_question"] = True
        d["features"]["answer_schema"] = "answer-v1+question"
        with pytest.raises(SchemaError):
            Model.from_dict(d)
        d = Model(ScorerParams.init(4, seed=0), FeaturePipeline.unfitted(), {}).to_dict()
        d["version"] = 99
        with pytest.raises(SchemaError):
            Model.from_dict(d)
