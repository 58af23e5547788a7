"""Synthetic question/answer corpora with planted diverse gold sets.

Each question covers a few latent topics.  Every answer is written about
one topic and has a latent quality in (0, 1): better answers are longer
and stay closer to their topic's vocabulary.  The gold set holds, for each
topic, its best answer if that answer's quality clears a threshold.  So
gold is a deterministic function of the latents: one representative per
distinct piece of content, and only if it is good enough.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import Answer, Instance

_ONSETS = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh", "tr", "pl", "gr"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]


@dataclass(frozen=True)
class SynthConfig:
    n_questions: int = 3680
    min_answers: int = 5
    max_answers: int = 12
    # P(question covers 1, 2, 3, ... topics)
    topic_weights: tuple = (0.48, 0.32, 0.14, 0.06)
    n_topics: int = 60
    topic_vocab: int = 30
    filler_vocab: int = 120
    quality_alpha: float = 2.0
    quality_beta: float = 2.2
    quality_threshold: float = 0.6
    min_words: int = 6
    words_per_quality: float = 40.0
    noise: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.n_questions < 0:
            raise ValueError("n_questions must be non-negative")
        if not 1 <= self.min_answers <= self.max_answers:
            raise ValueError("need 1 <= min_answers <= max_answers")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if not self.topic_weights or any(w < 0 for w in self.topic_weights) or sum(self.topic_weights) <= 0:
            raise ValueError("topic_weights must be non-negative with positive sum")
        if len(self.topic_weights) > self.n_topics:
            raise ValueError("more topics per question than topics available")
        if not 0.0 < self.quality_threshold < 1.0:
            raise ValueError("quality_threshold must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "topic_weights" in d:
            d["topic_weights"] = tuple(d["topic_weights"])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["topic_weights"] = list(self.topic_weights)
        return d


def _vocabulary(rng, size, taken):
    words = []
    while len(words) < size:
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(rng.integers(2, 4)))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


@dataclass
class _Lexicon:
    topics: list
    filler: list = field(default_factory=list)


def _lexicon(cfg):
    rng = np.random.default_rng([cfg.seed, 1])
    taken = set()
    filler = _vocabulary(rng, cfg.filler_vocab, taken)
    topics = [_vocabulary(rng, cfg.topic_vocab, taken) for _ in range(cfg.n_topics)]
    return _Lexicon(topics, filler)


def _sentence(words):
    text = " ".join(words)
    return text[:1].upper() + text[1:] + "."


def _answer_text(rng, cfg, lex, topic, quality):
    scale = np.exp(cfg.noise * rng.standard_normal()) if cfg.noise > 0 else 1.0
    length = max(2, int(round(cfg.min_words + cfg.words_per_quality * quality * scale)))
    on_topic = 0.35 + 0.45 * quality
    words = []
    for _ in range(length):
        if rng.random() < on_topic:
            words.append(lex.topics[topic][rng.integers(len(lex.topics[topic]))])
        else:
            words.append(lex.filler[rng.integers(len(lex.filler))])
    chunks = [words[i:i + 9] for i in range(0, len(words), 9)]
    return " ".join(_sentence(c) for c in chunks)


def planted_gold(topics, qualities, threshold):
    """Indices of the per-topic best answers whose quality reaches ``threshold``."""
    best = {}
    for i, (t, q) in enumerate(zip(topics, qualities)):
        if q >= threshold and (t not in best or q > qualities[best[t]]):
            best[t] = i
    return tuple(sorted(best.values()))


def _question(rng, cfg, lex, qnum):
    weights = np.asarray(cfg.topic_weights, dtype=float)
    n_topics = 1 + int(rng.choice(len(weights), p=weights / weights.sum()))
    topics = [int(t) for t in rng.choice(cfg.n_topics, size=n_topics, replace=False)]
    n = int(rng.integers(cfg.min_answers, cfg.max_answers + 1))
    assign = [topics[i] for i in range(min(n, n_topics))]
    assign += [topics[int(t)] for t in rng.integers(n_topics, size=n - len(assign))]
    assign = [assign[i] for i in rng.permutation(n)]
    quality = rng.beta(cfg.quality_alpha, cfg.quality_beta, size=n)
    if quality.max() < cfg.quality_threshold:
        # every question keeps at least one acceptable answer
        quality[int(np.argmax(quality))] = rng.uniform(cfg.quality_threshold, 0.8)

    texts = [_answer_text(rng, cfg, lex, t, q) for t, q in zip(assign, quality)]
    qwords = []
    for t in topics:
        qwords += [lex.topics[t][int(i)] for i in rng.integers(len(lex.topics[t]), size=4)]
    qwords += [lex.filler[int(i)] for i in rng.integers(len(lex.filler), size=5)]
    question = _sentence([qwords[int(i)] for i in rng.permutation(len(qwords))])[:-1] + "?"

    best = int(np.argmax(quality))
    answers = tuple(
        Answer(
            id=f"a{i + 1}",
            text=texts[i],
            is_best=(i == best),
            latent={"topic": assign[i], "quality": float(quality[i])},
        )
        for i in range(n)
    )
    gold = planted_gold(assign, list(quality), cfg.quality_threshold)
    return Instance(
        question_id=f"q{qnum:05d}",
        question=question,
        answers=answers,
        gold=tuple(answers[i].id for i in gold),
    )


def generate_synthetic(cfg=SynthConfig()):
    lex = _lexicon(cfg)
    rng = np.random.default_rng([cfg.seed, 2])
    return [_question(rng, cfg, lex, q + 1) for q in range(cfg.n_questions)]


def latent_oracle(inst, threshold=SynthConfig.quality_threshold):
    """Select answers by reading the generator's latents."""
    topics = [a.latent["topic"] for a in inst.answers]
    quality = [a.latent["quality"] for a in inst.answers]
    return planted_gold(topics, quality, threshold)


def calibration_summary(corpus):
    sizes = [len(inst.gold) for inst in corpus if inst.gold is not None]
    counts = np.bincount(sizes) if sizes else np.zeros(1, dtype=int)
    return {
        "questions": len(corpus),
        "mean_gold_size": float(np.mean(sizes)) if sizes else 0.0,
        "gold_size_histogram": {str(k): int(v) for k, v in enumerate(counts) if v},
        "mean_answers": float(np.mean([inst.n for inst in corpus])) if corpus else 0.0,
    }


def load_synth_config(path):
    with open(path, encoding="utf-8") as fh:
        return SynthConfig.from_dict(json.load(fh))
