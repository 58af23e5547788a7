"""Corpus schema, JSONL loading/saving and deterministic splits."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SPLIT = (0.70, 0.10, 0.20)


class CorpusError(ValueError):
    """A corpus record is malformed or violates an instance invariant."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Answer:
    id: str
    text: str
    is_best: bool = False
    # Generator latents (topic, quality); absent for real data.
    latent: dict | None = None


@dataclass(frozen=True)
class Instance:
    question_id: str
    question: str
    answers: tuple[Answer, ...]
    gold: tuple[str, ...] | None = None
    annotations: tuple[tuple[str, ...], ...] | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {a.id: i for i, a in enumerate(self.answers)})

    @property
    def n(self):
        return len(self.answers)

    @property
    def answer_ids(self):
        return tuple(a.id for a in self.answers)

    @property
    def texts(self):
        return [a.text for a in self.answers]

    def index_of(self, answer_id):
        try:
            return self._index[answer_id]
        except KeyError:
            raise KeyError(f"question {self.question_id!r} has no answer {answer_id!r}") from None

    def ids_of(self, indices):
        return tuple(self.answers[i].id for i in sorted(indices))

    def indices_of(self, ids):
        return tuple(sorted(self.index_of(a) for a in ids))

    @property
    def gold_indices(self):
        return None if self.gold is None else self.indices_of(self.gold)

    @property
    def best_index(self):
        for i, a in enumerate(self.answers):
            if a.is_best:
                return i
        return None


def validate(inst):
    """Raise :class:`CorpusError` if ``inst`` breaks an instance invariant."""
    qid = inst.question_id
    if inst.n < 1:
        raise CorpusError(f"question {qid!r} has no answers")
    seen = set()
    for a in inst.answers:
        if a.id in seen:
            raise CorpusError(f"question {qid!r}: duplicate answer id {a.id!r}")
        seen.add(a.id)
    if sum(a.is_best for a in inst.answers) > 1:
        raise CorpusError(f"question {qid!r}: more than one best answer")
    if inst.gold is not None:
        unknown = [g for g in inst.gold if g not in seen]
        if unknown:
            raise CorpusError(f"question {qid!r}: gold references unknown answer ids {unknown}")
        if len(set(inst.gold)) != len(inst.gold):
            raise CorpusError(f"question {qid!r}: duplicate ids in gold")
    if inst.annotations is not None:
        for sel in inst.annotations:
            unknown = [s for s in sel if s not in seen]
            if unknown:
                raise CorpusError(f"question {qid!r}: annotation references unknown answer ids {unknown}")
    return inst


def instance_from_dict(obj):
    if not isinstance(obj, dict):
        raise CorpusError("record is not a JSON object")
    try:
        answers = tuple(
            Answer(
                id=str(a["id"]),
                text=str(a["text"]),
                is_best=bool(a.get("is_best", False)),
                latent=a.get("latent"),
            )
            for a in obj["answers"]
        )
        gold = obj.get("gold")
        annotations = obj.get("annotations")
        inst = Instance(
            question_id=str(obj["question_id"]),
            question=str(obj.get("question", "")),
            answers=answers,
            gold=None if gold is None else tuple(str(g) for g in gold),
            annotations=None if annotations is None else tuple(tuple(str(s) for s in sel) for sel in annotations),
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"missing or malformed field: {exc}") from None
    return validate(inst)


def instance_to_dict(inst):
    answers = []
    for a in inst.answers:
        rec = {"id": a.id, "text": a.text, "is_best": a.is_best}
        if a.latent is not None:
            rec["latent"] = a.latent
        answers.append(rec)
    obj = {"question_id": inst.question_id, "question": inst.question, "answers": answers}
    if inst.gold is not None:
        obj["gold"] = list(inst.gold)
    if inst.annotations is not None:
        obj["annotations"] = [list(sel) for sel in inst.annotations]
    return obj


def load_corpus(path, strict=True, violations=None):
    """Read a JSONL corpus.

    In strict mode the first bad line raises :class:`CorpusError` (with its
    line number).  Otherwise bad lines are skipped, logged, and appended to
    ``violations`` when a list is given.
    """
    instances = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"malformed JSON: {exc.msg}") from None
                inst = instance_from_dict(obj)
                if inst.question_id in seen_ids:
                    raise CorpusError(f"duplicate question id {inst.question_id!r}")
            except CorpusError as exc:
                err = exc if exc.line is not None else CorpusError(str(exc), lineno)
                if strict:
                    raise err from None
                log.warning("%s: skipping %s", path, err)
                if violations is not None:
                    violations.append(err)
                continue
            seen_ids.add(inst.question_id)
            instances.append(inst)
    return instances


def save_corpus(instances, path):
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_dict(inst), ensure_ascii=False))
            fh.write("\n")


def split_corpus(corpus, ratios=DEFAULT_SPLIT, seed=0):
    """Shuffle and split into ``(train, dev, test)``.

    Dev and test sizes are floored; the remainder goes to train.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    corpus = list(corpus)
    n = len(corpus)
    n_dev = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [corpus[i] for i in order]
    n_train = n - n_dev - n_test
    return shuffled[:n_train], shuffled[n_train:n_train + n_dev], shuffled[n_train + n_dev:]
