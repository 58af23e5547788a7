"""Tokenization, tf-idf statistics and the hand-built answer/pair features."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

_WORD = re.compile(r"\w+", re.UNICODE)
_SPACE = re.compile(r"\s+", re.UNICODE)

TOKENIZER_MODES = ("words", "char_bigrams")

ANSWER_FEATURES = ("log_count", "type_token_ratio", "mean_idf", "relative_position")
QUESTION_FEATURES = ("question_cosine", "question_coverage")
BEST_FEATURES = ("is_best",)
PAIR_FEATURES = ("cosine", "jaccard", "log_length_gap", "bigram_overlap")
PAIR_SCHEMA = "pair-v1"


def tokenize(text, mode="words"):
    if mode == "words":
        return _WORD.findall(text.lower())
    if mode == "char_bigrams":
        s = _SPACE.sub("", text.lower())
        if len(s) == 1:
            return [s]
        return [s[i:i + 2] for i in range(len(s) - 1)]
    raise ValueError(f"unknown tokenizer mode {mode!r}; expected one of {TOKENIZER_MODES}")


@dataclass(frozen=True)
class CorpusStats:
    df: dict
    n_docs: int

    def idf(self, token):
        # smoothed so unseen tokens stay finite
        return math.log((1 + self.n_docs) / (1 + self.df.get(token, 0))) + 1.0


def build_stats(instances, mode="words"):
    """Document frequencies over every answer and question text."""
    df = Counter()
    n_docs = 0
    for inst in instances:
        for text in [inst.question, *inst.texts]:
            df.update(set(tokenize(text, mode)))
            n_docs += 1
    return CorpusStats(df=dict(df), n_docs=n_docs)


def tfidf(tokens, stats):
    counts = Counter(tokens)
    return {t: c * stats.idf(t) for t, c in counts.items()}


def cosine(u, v):
    if len(u) > len(v):
        u, v = v, u
    dot = sum(w * v.get(t, 0.0) for t, w in u.items())
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return min(1.0, dot / (nu * nv))


def _bigrams(tokens):
    return set(zip(tokens, tokens[1:]))


@dataclass(frozen=True)
class FeatureConfig:
    include_question: bool = False
    use_best_flag: bool = False
    tokenizer: str = "words"

    @property
    def answer_names(self):
        names = ANSWER_FEATURES
        if self.include_question:
            names += QUESTION_FEATURES
        if self.use_best_flag:
            names += BEST_FEATURES
        return names

    @property
    def answer_schema(self):
        sid = "answer-v1"
        if self.include_question:
            sid += "+question"
        if self.use_best_flag:
            sid += "+best"
        return sid


def extract_answer_features(question, answer, position, n_answers, stats, cfg=FeatureConfig(), is_best=False):
    """Raw (unstandardized) importance features for one answer."""
    toks = tokenize(answer, cfg.tokenizer)
    count = len(toks)
    feats = [
        math.log1p(count),
        len(set(toks)) / count if count else 0.0,
        sum(stats.idf(t) for t in toks) / count if count else 0.0,
        position / n_answers,
    ]
    if cfg.include_question:
        qtoks = tokenize(question, cfg.tokenizer)
        qset = set(qtoks)
        feats.append(cosine(tfidf(qtoks, stats), tfidf(toks, stats)))
        feats.append(len(qset & set(toks)) / len(qset) if qset else 0.0)
    if cfg.use_best_flag:
        feats.append(1.0 if is_best else 0.0)
    return np.array(feats)


def _pair_from_tokens(ti, tj, vi, vj):
    si, sj = set(ti), set(tj)
    union = si | sj
    bi, bj = _bigrams(ti), _bigrams(tj)
    smaller = min(len(bi), len(bj))
    return [
        cosine(vi, vj),
        len(si & sj) / len(union) if union else 0.0,
        abs(math.log1p(len(ti)) - math.log1p(len(tj))),
        len(bi & bj) / smaller if smaller else 0.0,
    ]


def extract_pair_features(answer_i, answer_j, stats, mode="words"):
    """Raw similarity features; every entry is invariant to argument order."""
    ti, tj = tokenize(answer_i, mode), tokenize(answer_j, mode)
    return np.array(_pair_from_tokens(ti, tj, tfidf(ti, stats), tfidf(tj, stats)))


@dataclass(frozen=True)
class InstanceFeatures:
    answers: np.ndarray
    pairs: np.ndarray
    pair_index: np.ndarray

    @property
    def n(self):
        return self.answers.shape[0]


def featurize(inst, stats, cfg=FeatureConfig()):
    """Raw answer and pair feature matrices for one instance.

    Pairs are the ``i < j`` index pairs in row-major order.
    """
    n = inst.n
    toks = [tokenize(t, cfg.tokenizer) for t in inst.texts]
    vecs = [tfidf(t, stats) for t in toks]
    answers = np.array([
        extract_answer_features(inst.question, a.text, i, n, stats, cfg, a.is_best)
        for i, a in enumerate(inst.answers)
    ])
    pair_index = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.intp).reshape(-1, 2)
    pairs = np.array(
        [_pair_from_tokens(toks[i], toks[j], vecs[i], vecs[j]) for i, j in pair_index]
    ).reshape(-1, len(PAIR_FEATURES))
    return InstanceFeatures(answers=answers, pairs=pairs, pair_index=pair_index)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def fit(cls, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.shape[0] == 0:
            return cls.identity(rows.shape[1])
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        return cls(mean, np.where(std > 1e-12, std, 1.0))

    def __call__(self, rows):
        return (rows - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


@dataclass(frozen=True)
class FeaturePipeline:
    """Feature configuration plus standardizers fitted on a training split."""

    config: FeatureConfig
    answer_scaler: Standardizer
    pair_scaler: Standardizer

    @classmethod
    def fit(cls, featurized, cfg=FeatureConfig()):
        answers = np.vstack([f.answers for f in featurized]) if featurized else np.zeros((0, len(cfg.answer_names)))
        pairs = [f.pairs for f in featurized if len(f.pairs)]
        pairs = np.vstack(pairs) if pairs else np.zeros((0, len(PAIR_FEATURES)))
        return cls(cfg, Standardizer.fit(answers), Standardizer.fit(pairs))

    @classmethod
    def unfitted(cls, cfg=FeatureConfig()):
        return cls(cfg, Standardizer.identity(len(cfg.answer_names)), Standardizer.identity(len(PAIR_FEATURES)))

    def transform(self, f):
        return InstanceFeatures(
            answers=self.answer_scaler(f.answers),
            pairs=self.pair_scaler(f.pairs) if len(f.pairs) else f.pairs,
            pair_index=f.pair_index,
        )

    def to_dict(self):
        return {
            "include_question": self.config.include_question,
            "use_best_flag": self.config.use_best_flag,
            "tokenizer": self.config.tokenizer,
            "answer_schema": self.config.answer_schema,
            "pair_schema": PAIR_SCHEMA,
            "answer_scaler": self.answer_scaler.to_dict(),
            "pair_scaler": self.pair_scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        cfg = FeatureConfig(
            include_question=bool(d["include_question"]),
            use_best_flag=bool(d["use_best_flag"]),
            tokenizer=d["tokenizer"],
        )
        if d.get("answer_schema", cfg.answer_schema) != cfg.answer_schema:
            raise ValueError(f"answer schema {d['answer_schema']!r} does not match its flags")
        return cls(cfg, Standardizer.from_dict(d["answer_scaler"]), Standardizer.from_dict(d["pair_scaler"]))
