"""Fixed-size selection baselines: random, word count, LexRank, external scores.

Every selector returns a sorted tuple of answer indices.
"""

from __future__ import annotations

import zlib

import numpy as np

from .features import build_stats, cosine, tfidf, tokenize


def _check_k(inst, k):
    if not 1 <= k <= inst.n:
        raise ValueError(f"k={k} must be between 1 and the answer count {inst.n}")


def top_k(scores, k):
    """Indices of the ``k`` largest scores; equal scores favour the lower index."""
    scores = np.asarray(scores, dtype=float)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return tuple(sorted(order[:k]))


def random_k(inst, k, seed=0):
    """Uniform sample without replacement, fixed per (seed, question id)."""
    _check_k(inst, k)
    rng = np.random.default_rng([seed, zlib.crc32(inst.question_id.encode("utf-8"))])
    return tuple(sorted(int(i) for i in rng.choice(inst.n, size=k, replace=False)))


def word_counts(inst, mode="words"):
    return np.array([len(tokenize(t, mode)) for t in inst.texts], dtype=float)


def wordnum_k(inst, k, mode="words"):
    _check_k(inst, k)
    return top_k(word_counts(inst, mode), k)


def lexrank_scores(inst, threshold=0.1, damping=0.85, stats=None, mode="words", tol=1e-6, max_iter=100):
    """Thresholded LexRank over whole answers.

    Answers are linked when their tf-idf cosine reaches ``threshold``.  A
    random surfer follows links with probability ``damping`` and otherwise
    jumps uniformly.  An answer without links passes nothing along, so it
    only ever receives jump mass.  Scores are renormalized to sum to one
    after every iteration.
    """
    n = inst.n
    if n < 1:
        raise ValueError("LexRank needs at least one answer")
    if stats is None:
        stats = build_stats([inst], mode)
    vecs = [tfidf(tokenize(t, mode), stats) for t in inst.texts]
    adj = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if cosine(vecs[i], vecs[j]) >= threshold:
                adj[i, j] = adj[j, i] = 1.0
    deg = adj.sum(axis=1)
    trans = adj / np.maximum(deg, 1.0)[:, None]

    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = (1.0 - damping) / n * p.sum() + damping * (trans.T @ p)
        nxt /= nxt.sum()
        done = np.max(np.abs(nxt - p)) < tol
        p = nxt
        if done:
            break
    return p


def lexrank_k(inst, k, **kwargs):
    _check_k(inst, k)
    return top_k(lexrank_scores(inst, **kwargs), k)


def external_ranking_k(inst, scores, k):
    """Top-``k`` by externally supplied scores, keyed by answer id."""
    _check_k(inst, k)
    missing = [a for a in inst.answer_ids if a not in scores]
    if missing:
        raise KeyError(f"question {inst.question_id!r}: no external score for answers {missing}")
    return top_k([float(scores[a]) for a in inst.answer_ids], k)
