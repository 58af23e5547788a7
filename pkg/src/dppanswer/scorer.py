"""Trainable importance and similarity heads.

Each head is a one-hidden-layer tanh perceptron over a feature vector.  The
importance head ends in ``exp`` (so scores are positive) and the similarity
head in a sigmoid.  Any object producing ``imp``/``sim`` plus gradients can
stand in for these heads; the DPP code only sees the scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .features import PAIR_SCHEMA, FeaturePipeline, featurize

FORMAT = "dppanswer.model"
FORMAT_VERSION = 1
CLAMP = 30.0
DEFAULT_HIDDEN = 16


class SchemaError(ValueError):
    """Feature vector does not match the head it is fed to."""


@dataclass
class MLPHead:
    schema: str
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def input_dim(self):
        return self.W1.shape[0]

    @property
    def hidden(self):
        return self.W1.shape[1]

    def arrays(self):
        return [self.W1, self.b1, self.w2, self.b2]

    def forward(self, x):
        h = np.tanh(x @ self.W1 + self.b1)
        return h, h @ self.w2 + self.b2[0]

    def backward(self, x, h, dz):
        da = np.outer(dz, self.w2) * (1.0 - h * h)
        return MLPHead(self.schema, x.T @ da, da.sum(axis=0), h.T @ dz, np.array([dz.sum()]))

    def check(self, x, schema=None):
        x = np.asarray(x, dtype=float)
        if schema is not None and schema != self.schema:
            raise SchemaError(f"feature schema {schema!r} does not match head schema {self.schema!r}")
        if x.shape[-1] != self.input_dim:
            raise SchemaError(f"feature length {x.shape[-1]} does not match head input size {self.input_dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        return x

    def to_dict(self):
        return {
            "schema": self.schema,
            "input_dim": self.input_dim,
            "W1": self.W1.ravel().tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_dict(cls, d, hidden):
        d_in = int(d["input_dim"])
        return cls(
            schema=d["schema"],
            W1=np.array(d["W1"], dtype=float).reshape(d_in, hidden),
            b1=np.array(d["b1"], dtype=float),
            w2=np.array(d["w2"], dtype=float),
            b2=np.array(d["b2"], dtype=float),
        )


def _init_head(rng, schema, d_in, hidden):
    return MLPHead(
        schema=schema,
        W1=rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_in, hidden)),
        b1=np.zeros(hidden),
        w2=rng.normal(0.0, 0.1 / np.sqrt(hidden), size=hidden),
        b2=np.zeros(1),
    )


def _zero_head(schema, d_in, hidden):
    return MLPHead(schema, np.zeros((d_in, hidden)), np.zeros(hidden), np.zeros(hidden), np.zeros(1))


@dataclass
class ScorerParams:
    imp_head: MLPHead
    sim_head: MLPHead

    @property
    def hidden(self):
        return self.imp_head.hidden

    @classmethod
    def init(cls, answer_dim, seed, hidden=DEFAULT_HIDDEN, answer_schema="answer-v1", pair_dim=4):
        rng = np.random.default_rng(seed)
        return cls(_init_head(rng, answer_schema, answer_dim, hidden), _init_head(rng, PAIR_SCHEMA, pair_dim, hidden))

    @classmethod
    def zeros(cls, answer_dim, hidden=DEFAULT_HIDDEN, answer_schema="answer-v1", pair_dim=4):
        return cls(_zero_head(answer_schema, answer_dim, hidden), _zero_head(PAIR_SCHEMA, pair_dim, hidden))

    def arrays(self):
        return self.imp_head.arrays() + self.sim_head.arrays()

    def to_vector(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_vector(self, vec):
        """Copy of these params with every weight taken from ``vec``."""
        out = []
        pos = 0
        for a in self.arrays():
            out.append(np.array(vec[pos:pos + a.size], dtype=float).reshape(a.shape))
            pos += a.size
        if pos != len(vec):
            raise ValueError(f"expected {pos} weights, got {len(vec)}")
        return ScorerParams(
            MLPHead(self.imp_head.schema, *out[:4]),
            MLPHead(self.sim_head.schema, *out[4:]),
        )

    def to_dict(self):
        return {"hidden": self.hidden, "imp_head": self.imp_head.to_dict(), "sim_head": self.sim_head.to_dict()}

    @classmethod
    def from_dict(cls, d):
        h = int(d["hidden"])
        return cls(MLPHead.from_dict(d["imp_head"], h), MLPHead.from_dict(d["sim_head"], h))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def importance(p, f, schema=None):
    """``exp`` of the importance head, pre-activation clamped to +-30."""
    x = p.imp_head.check(f, schema)
    _, z = p.imp_head.forward(x)
    return np.exp(np.clip(z, -CLAMP, CLAMP))


def similarity(p, f, schema=None):
    """Sigmoid of the similarity head.

    The pre-activation is clamped to +-30 as well, which keeps the output
    strictly inside (0, 1).
    """
    x = p.sim_head.check(f, schema)
    _, z = p.sim_head.forward(x)
    return _sigmoid(np.clip(z, -CLAMP, CLAMP))


@dataclass
class ForwardCache:
    answers: np.ndarray
    pairs: np.ndarray
    pair_index: np.ndarray
    h_imp: np.ndarray
    z_imp: np.ndarray
    h_sim: np.ndarray
    z_sim: np.ndarray
    pair_sim: np.ndarray
    imp: np.ndarray
    sim: np.ndarray

    @property
    def n(self):
        return self.imp.shape[0]


def forward(p, feats):
    """Score standardized :class:`~dppanswer.features.InstanceFeatures`."""
    x = p.imp_head.check(feats.answers)
    h_imp, z_imp = p.imp_head.forward(x)
    imp = np.exp(np.clip(z_imp, -CLAMP, CLAMP))
    n = imp.shape[0]
    sim = np.eye(n)
    if len(feats.pairs):
        xp = p.sim_head.check(feats.pairs)
        h_sim, z_sim = p.sim_head.forward(xp)
        s = _sigmoid(np.clip(z_sim, -CLAMP, CLAMP))
        i, j = feats.pair_index[:, 0], feats.pair_index[:, 1]
        sim[i, j] = s
        sim[j, i] = s
    else:
        h_sim = np.zeros((0, p.sim_head.hidden))
        z_sim = s = np.zeros(0)
    return ForwardCache(feats.answers, feats.pairs, feats.pair_index, h_imp, z_imp, h_sim, z_sim, s, imp, sim)


def score_instance(p, inst, stats, pipeline=None):
    """``(imp, sim)`` for one question; ``sim`` has a unit diagonal."""
    cache = forward_instance(p, inst, stats, pipeline)
    return cache.imp, cache.sim


def forward_instance(p, inst, stats, pipeline=None):
    if inst.n < 1:
        raise ValueError(f"question {inst.question_id!r} has no answers")
    pipeline = pipeline or FeaturePipeline.unfitted()
    return forward(p, pipeline.transform(featurize(inst, stats, pipeline.config)))


def backward(p, cache, dL, inst=None):
    """Parameter gradient given ``dL``, the loss gradient w.r.t. the kernel.

    Chain rule through ``L_ij = imp_i imp_j sim_ij`` with a symmetric
    ``dL`` whose entries are treated as independent.
    """
    dL = np.asarray(dL, dtype=float)
    n = cache.n
    if dL.shape != (n, n) or (inst is not None and inst.n != n):
        raise ValueError(f"gradient of shape {dL.shape} does not match cached forward state for {n} answers")
    imp, sim = cache.imp, cache.sim
    d_imp = 2.0 * (dL * sim) @ imp
    dz_imp = d_imp * imp * (np.abs(cache.z_imp) < CLAMP)
    g_imp = p.imp_head.backward(cache.answers, cache.h_imp, dz_imp)

    if len(cache.pair_index):
        i, j = cache.pair_index[:, 0], cache.pair_index[:, 1]
        d_s = 2.0 * dL[i, j] * imp[i] * imp[j]
        s = cache.pair_sim
        dz_sim = d_s * s * (1.0 - s) * (np.abs(cache.z_sim) < CLAMP)
        g_sim = p.sim_head.backward(cache.pairs, cache.h_sim, dz_sim)
    else:
        sh = p.sim_head
        g_sim = MLPHead(sh.schema, np.zeros_like(sh.W1), np.zeros_like(sh.b1), np.zeros_like(sh.w2), np.zeros(1))
    return ScorerParams(g_imp, g_sim)


@dataclass
class Model:
    """A scorer together with the feature pipeline it was trained with."""

    params: ScorerParams
    pipeline: FeaturePipeline
    meta: dict

    def to_dict(self):
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "scorer": self.params.to_dict(),
            "features": self.pipeline.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported model document {d.get('format')!r} v{d.get('version')!r}")
        params = ScorerParams.from_dict(d["scorer"])
        pipeline = FeaturePipeline.from_dict(d["features"])
        if params.imp_head.schema != pipeline.config.answer_schema:
            raise SchemaError(
                f"importance head schema {params.imp_head.schema!r} does not match "
                f"feature schema {pipeline.config.answer_schema!r}"
            )
        if params.imp_head.input_dim != len(pipeline.config.answer_names):
            raise SchemaError("importance head input size does not match the feature schema")
        return cls(params, pipeline, d.get("meta", {}))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
