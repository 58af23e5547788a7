import json

import numpy as np
import pytest

from dppanswer.corpus import (
    CorpusError,
    instance_from_dict,
    instance_to_dict,
    load_corpus,
    save_corpus,
    split_corpus,
)
from dppanswer.synthetic import (
    SynthConfig,
    calibration_summary,
    generate_synthetic,
    latent_oracle,
    planted_gold,
)


def record(qid="q1", answers=("a1", "a2"), gold=None, **extra):
    obj = {"question_id": qid, "question": "why?", "answers": [{"id": a, "text": f"text {a}"} for a in answers]}
    if gold is not None:
        obj["gold"] = list(gold)
    obj.update(extra)
    return obj


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestLoad:
    def test_three_lines(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps(record(f"q{i}")) for i in range(3)])
        corpus = load_corpus(p)
        assert [i.question_id for i in corpus] == ["q0", "q1", "q2"]

    def test_duplicate_answer_id(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps(record()), json.dumps(record("q2", ("a1", "a1")))])
        with pytest.raises(CorpusError, match=r"line 2.*'a1'") as exc:
            load_corpus(p)
        assert exc.value.line == 2

    def test_gold_unknown(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps(record(gold=["a9"]))])
        with pytest.raises(CorpusError, match="a9"):
            load_corpus(p)

    def test_malformed_json(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps(record()), "{oops"])
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(p)

    def test_lenient_collects_violations(self, tmp_path):
        lines = [json.dumps(record("q1")), "[]", json.dumps(record("q1")), json.dumps(record("q3", ()))]
        p = write_lines(tmp_path / "c.jsonl", lines + [json.dumps(record("q4"))])
        violations = []
        corpus = load_corpus(p, strict=False, violations=violations)
        assert [i.question_id for i in corpus] == ["q1", "q4"]
        assert [v.line for v in violations] == [2, 3, 4]

    def test_two_best_answers(self):
        obj = record()
        for a in obj["answers"]:
            a["is_best"] = True
        with pytest.raises(CorpusError, match="best"):
            instance_from_dict(obj)

    def test_missing_field(self):
        with pytest.raises(CorpusError):
            instance_from_dict({"question_id": "q"})

    def test_round_trip(self, tmp_path):
        objs = [record("q1", gold=["a2"], annotations=[["a1"], ["a1", "a2"]]), record("q2")]
        corpus = [instance_from_dict(o) for o in objs]
        save_corpus(corpus, tmp_path / "c.jsonl")
        back = load_corpus(tmp_path / "c.jsonl")
        assert back == corpus
        assert [instance_to_dict(i) for i in back] == [instance_to_dict(i) for i in corpus]

    def test_instance_helpers(self):
        inst = instance_from_dict(record(answers=("x", "y", "z"), gold=["z", "x"]))
        assert inst.gold_indices == (0, 2)
        assert inst.ids_of([2, 1]) == ("y", "z")
        with pytest.raises(KeyError):
            inst.index_of("w")


class TestSplit:
    def test_default_ratio_sizes(self):
        train, dev, test = split_corpus(list(range(3680)), seed=0)
        assert (len(train), len(dev), len(test)) == (2576, 368, 736)

    def test_small_rounding(self):
        assert tuple(map(len, split_corpus(list(range(10))))) == (7, 1, 2)

    def test_deterministic_disjoint_complete(self):
        a = split_corpus(list(range(50)), seed=3)
        b = split_corpus(list(range(50)), seed=3)
        assert a == b
        flat = [x for part in a for x in part]
        assert sorted(flat) == list(range(50))

    def test_bad_ratios(self):
        with pytest.raises(ValueError):
            split_corpus([1, 2], (0.5, 0.5, 0.5))


class TestSynthetic:
    def test_single_topic_rule(self):
        assert planted_gold([0, 0, 0], [0.9, 0.3, 0.2], 0.6) == (0,)

    def test_two_topics(self):
        assert len(planted_gold([0, 1, 0], [0.9, 0.9, 0.5], 0.6)) == 2

    def test_reproducible(self):
        cfg = SynthConfig(n_questions=20, seed=5)
        assert generate_synthetic(cfg) == generate_synthetic(cfg)
        assert generate_synthetic(cfg) != generate_synthetic(SynthConfig(n_questions=20, seed=6))

    def test_zero_questions(self):
        assert generate_synthetic(SynthConfig(n_questions=0)) == []

    def test_noise_free_length_tracks_quality(self):
        corpus = generate_synthetic(SynthConfig(n_questions=30, noise=0.0))
        q = [a.latent["quality"] for inst in corpus for a in inst.answers]
        lengths = [len(a.text.split()) for inst in corpus for a in inst.answers]
        assert np.corrcoef(q, lengths)[0, 1] > 0.99

    def test_oracle_is_exact(self):
        for inst in generate_synthetic(SynthConfig(n_questions=200, seed=2)):
            assert latent_oracle(inst) == inst.gold_indices
            assert 5 <= inst.n <= 12

    def test_default_calibration(self):
        summary = calibration_summary(generate_synthetic(SynthConfig()))
        assert summary["questions"] == 3680
        assert abs(summary["mean_gold_size"] - 1.38) <= 0.15

    def test_config_round_trip(self):
        cfg = SynthConfig(topic_weights=(0.5, 0.5), seed=9)
        assert SynthConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    @pytest.mark.parametrize("bad", [{"n_questions": -1}, {"noise": -0.1}, {"min_answers": 0}, {"quality_threshold": 1.0}])
    def test_invalid_config(self, bad):
        with pytest.raises(ValueError):
            SynthConfig(**bad)
