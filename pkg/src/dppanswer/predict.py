"""Answer-set prediction with a trained model."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import dpp
from .kernel import DEFAULT_PSD_FLOOR
from .training import kernel_for, prepare


@dataclass(frozen=True)
class Prediction:
    question_id: str
    indices: tuple
    answer_ids: tuple
    method: str
    log_prob: float

    def to_dict(self):
        return {
            "question_id": self.question_id,
            "predicted": list(self.answer_ids),
            "method": self.method,
            "log_prob": self.log_prob,
        }


def predict(model, instances, psd_floor=DEFAULT_PSD_FLOOR, cap=dpp.DEFAULT_EXHAUSTIVE_CAP, threads=1):
    """MAP answer set for every instance, in input order.

    Corpus statistics are computed over ``instances`` themselves.
    """
    instances = list(instances)
    feats = prepare(instances, model.pipeline)

    def one(pair):
        inst, f = pair
        _, k = kernel_for(model.params, f, psd_floor)
        idx, method = dpp.map_select(k, cap)
        return Prediction(inst.question_id, idx, inst.ids_of(idx), method, dpp.subset_log_prob(k, idx))

    pairs = list(zip(instances, feats))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, pairs))
    return [one(p) for p in pairs]
