"""Maximum-likelihood training of the scorer heads under the DPP loss."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dpp
from .features import FeatureConfig, FeaturePipeline, build_stats, featurize
from .kernel import DEFAULT_PSD_FLOOR, build_kernel, project_psd, project_psd_backward
from .scorer import DEFAULT_HIDDEN, Model, ScorerParams, backward, forward

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 5
    seeds: int = 3
    psd_floor: float = DEFAULT_PSD_FLOOR
    hidden: int = DEFAULT_HIDDEN
    weight_decay: float = 0.01
    clip_norm: float = 5.0
    include_question: bool = False
    use_best_flag: bool = False
    tokenizer: str = "words"
    exhaustive_cap: int = dpp.DEFAULT_EXHAUSTIVE_CAP
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 1 or self.seeds < 1:
            raise ValueError("epochs and seeds must be at least 1")
        if not self.psd_floor > 0:
            raise ValueError("psd_floor must be positive")
        if self.hidden < 1:
            raise ValueError("hidden width must be at least 1")
        if not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive")

    @property
    def features(self):
        return FeatureConfig(self.include_question, self.use_best_flag, self.tokenizer)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


class AdamW:
    """Adaptive moments with decoupled weight decay over a flat vector."""

    def __init__(self, size, lr, weight_decay, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return theta - self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * theta)


def clip_by_norm(grad, max_norm):
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm), norm
    return grad, norm


@dataclass
class Prepared:
    """Standardized features and gold indices for a list of instances."""

    instances: list
    features: list
    gold: list


@dataclass
class TrainingData:
    pipeline: FeaturePipeline
    train: Prepared
    dev: Prepared

    @classmethod
    def build(cls, corpus, dev, cfg):
        fcfg = cfg.features
        raw_train = _raw(corpus, fcfg)
        pipeline = FeaturePipeline.fit(raw_train, fcfg)
        return cls(
            pipeline,
            _prepare(corpus, raw_train, pipeline),
            _prepare(dev, _raw(dev, fcfg), pipeline),
        )


def _raw(instances, fcfg):
    stats = build_stats(instances, fcfg.tokenizer)
    return [featurize(inst, stats, fcfg) for inst in instances]


def _prepare(instances, raw, pipeline):
    gold = []
    for inst in instances:
        if not inst.gold:
            raise ValueError(f"question {inst.question_id!r} has no gold set; cannot train or validate on it")
        gold.append(inst.gold_indices)
    return Prepared(list(instances), [pipeline.transform(f) for f in raw], gold)


def prepare(instances, pipeline):
    """Standardized features for scoring ``instances`` with a fitted pipeline."""
    return [pipeline.transform(f) for f in _raw(instances, pipeline.config)]


def kernel_for(params, feats, psd_floor):
    cache = forward(params, feats)
    return cache, project_psd(build_kernel(cache.imp, cache.sim), psd_floor)


def loss_and_grad(params, feats, gold, psd_floor):
    """NLL of one question and its parameter gradient (flat vector)."""
    cache, k = kernel_for(params, feats, psd_floor)
    loss = dpp.nll(k, gold)
    dL = project_psd_backward(k, dpp.nll_grad_L(k, gold), psd_floor)
    g = backward(params, cache, dL)
    return loss, g.to_vector(), k.repaired


def mean_nll(params, data, psd_floor):
    if not data.features:
        return 0.0
    return float(np.mean([dpp.nll(kernel_for(params, f, psd_floor)[1], g) for f, g in zip(data.features, data.gold)]))


def accuracy(params, data, cfg):
    if not data.features:
        return 0.0
    hits = 0
    for f, g in zip(data.features, data.gold):
        pred, _ = dpp.map_select(kernel_for(params, f, cfg.psd_floor)[1], cfg.exhaustive_cap)
        hits += tuple(pred) == tuple(g)
    return hits / len(data.features)


@dataclass
class TrainRun:
    seed: int
    initial_nll: float
    train_nll: list = field(default_factory=list)
    dev_accuracy: list = field(default_factory=list)
    best_epoch: int = 0
    params: ScorerParams = None
    last_params: ScorerParams = None
    pipeline: FeaturePipeline = None
    repairs: int = 0

    @property
    def best_dev_accuracy(self):
        return self.dev_accuracy[self.best_epoch - 1] if self.dev_accuracy else 0.0

    def history(self):
        return [
            {"seed": self.seed, "epoch": e + 1, "train_nll": nll_, "dev_accuracy": acc}
            for e, (nll_, acc) in enumerate(zip(self.train_nll, self.dev_accuracy))
        ]

    def model(self, cfg, extra=None):
        meta = {
            "seed": self.seed,
            "best_epoch": self.best_epoch,
            "dev_accuracy": self.best_dev_accuracy,
            "train_config": cfg.to_dict(),
        }
        meta.update(extra or {})
        return Model(self.params, self.pipeline, meta)


def train_one(corpus, dev, cfg, seed, data=None):
    """One seeded training run, one question per optimizer step.

    The per-epoch train NLL is the mean loss seen during that epoch;
    ``initial_nll`` is a full pass before the first update.  Keeps the
    parameters of the epoch with the best dev accuracy (earliest on ties)
    alongside the final ones.
    """
    if data is None:
        data = TrainingData.build(corpus, dev, cfg)
    fcfg = cfg.features
    params = ScorerParams.init(
        answer_dim=len(fcfg.answer_names), seed=seed, hidden=cfg.hidden, answer_schema=fcfg.answer_schema
    )
    theta = params.to_vector()
    opt = AdamW(theta.size, cfg.learning_rate, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(seed)
    run = TrainRun(seed=seed, initial_nll=mean_nll(params, data.train, cfg.psd_floor), pipeline=data.pipeline)
    best_acc = -1.0
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for i in rng.permutation(len(data.train.features)):
            loss, grad, repaired = loss_and_grad(params, data.train.features[i], data.train.gold[i], cfg.psd_floor)
            total += loss
            run.repairs += repaired
            grad, _ = clip_by_norm(grad, cfg.clip_norm)
            theta = opt.step(theta, grad)
            params = params.with_vector(theta)
        run.train_nll.append(total / max(1, len(data.train.features)))
        acc = accuracy(params, data.dev, cfg)
        run.dev_accuracy.append(acc)
        log.info("seed %d epoch %d: train nll %.4f, dev accuracy %.4f", seed, epoch, run.train_nll[-1], acc)
        if acc > best_acc:
            best_acc = acc
            run.best_epoch = epoch
            run.params = params
    run.last_params = params
    return run


def train_seeds(corpus, dev, cfg, base_seed=0, threads=1):
    """``cfg.seeds`` independent runs with seeds ``base_seed, base_seed + 1, ...``."""
    data = TrainingData.build(corpus, dev, cfg)
    seeds = [base_seed + s for s in range(cfg.seeds)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda s: train_one(corpus, dev, cfg, s, data), seeds))
    return [train_one(corpus, dev, cfg, s, data) for s in seeds]


def select_best(runs):
    """Run with the highest best-epoch dev accuracy; ties go to the lower seed."""
    if not runs:
        raise ValueError("no training runs to select from")
    return min(runs, key=lambda r: (-r.best_dev_accuracy, r.seed))


def summarize(runs):
    """Dev accuracy averaged over runs, at each run's best epoch and at its last epoch."""
    return {
        "mean_best_epoch_dev_accuracy": float(np.mean([r.best_dev_accuracy for r in runs])),
        "mean_last_epoch_dev_accuracy": float(np.mean([r.dev_accuracy[-1] for r in runs])),
        "runs": [{"seed": r.seed, "best_epoch": r.best_epoch, "dev_accuracy": r.best_dev_accuracy} for r in runs],
    }
