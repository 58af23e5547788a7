"""Set-level metrics: exact-match accuracy, precision, recall and F1."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


def harmonic_f1(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class QuestionRecord:
    question_id: str
    predicted: tuple
    gold: tuple
    overlap: int


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    mode: str = "macro"
    records: tuple = field(default=(), repr=False)

    def to_dict(self, with_records=True):
        d = {
            "mode": self.mode,
            "questions": len(self.records),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if with_records:
            d["records"] = [
                {"question_id": r.question_id, "predicted": list(r.predicted), "gold": list(r.gold), "overlap": r.overlap}
                for r in self.records
            ]
        return d


def evaluate(preds, golds, mode="macro"):
    """Compare predicted and gold answer sets, both keyed by question id.

    ``macro`` averages per-question precision and recall; ``micro`` pools
    the counts.  Either way F1 is the harmonic mean of the reported
    precision and recall.
    """
    if mode not in ("macro", "micro"):
        raise ValueError(f"unknown metric mode {mode!r}")
    if set(preds) != set(golds):
        only_p = sorted(set(preds) - set(golds))
        only_g = sorted(set(golds) - set(preds))
        raise ValueError(f"question ids differ: predictions only {only_p[:10]}, gold only {only_g[:10]}")
    records = []
    exact = p_sum = r_sum = 0.0
    inter_sum = pred_sum = gold_sum = 0
    for qid in sorted(golds):
        gold = set(golds[qid])
        pred = set(preds[qid])
        if not gold:
            raise ValueError(f"question {qid!r} has an empty gold set")
        inter = len(pred & gold)
        exact += pred == gold
        p_sum += inter / len(pred) if pred else 0.0
        r_sum += inter / len(gold)
        inter_sum += inter
        pred_sum += len(pred)
        gold_sum += len(gold)
        records.append(QuestionRecord(qid, tuple(sorted(pred)), tuple(sorted(gold)), inter))
    m = len(records)
    if m == 0:
        return EvalReport(0.0, 0.0, 0.0, 0.0, mode, ())
    if mode == "macro":
        precision, recall = p_sum / m, r_sum / m
    else:
        precision = inter_sum / pred_sum if pred_sum else 0.0
        recall = inter_sum / gold_sum
    return EvalReport(exact / m, precision, recall, harmonic_f1(precision, recall), mode, tuple(records))


def format_table(rows):
    """Plain-text table with columns Model, Acc., Prec., Rec., F1.

    ``rows`` is a list of ``(name, EvalReport)`` pairs.
    """
    width = max([5] + [len(name) for name, _ in rows])
    lines = [f"{'Model':<{width}}  Acc.   Prec.  Rec.   F1", "-" * (width + 30)]
    for name, r in rows:
        lines.append(f"{name:<{width}}  {r.accuracy:.3f}  {r.precision:.3f}  {r.recall:.3f}  {r.f1:.3f}")
    return "\n".join(lines)


@dataclass(frozen=True)
class GoldStats:
    histogram: dict
    total: int
    mean: float

    def ratio(self, size):
        return self.histogram.get(size, 0) / self.total if self.total else 0.0

    def format(self):
        sizes = sorted(self.histogram)
        head = "# of answers   " + " ".join(f"{s:>6}" for s in sizes)
        count = "# of questions " + " ".join(f"{self.histogram[s]:>6}" for s in sizes)
        ratio = "ratio          " + " ".join(f"{self.ratio(s):>6.2f}" for s in sizes)
        return "\n".join([head, count, ratio, f"mean size {self.mean:.2f} over {self.total} questions"])


def gold_stats(corpus):
    """Distribution of gold-set sizes over instances that have a gold set."""
    sizes = Counter(len(inst.gold) for inst in corpus if inst.gold is not None)
    return gold_stats_from_histogram(sizes)


def gold_stats_from_histogram(histogram):
    histogram = {int(k): int(v) for k, v in histogram.items()}
    total = sum(histogram.values())
    mean = sum(k * v for k, v in histogram.items()) / total if total else 0.0
    return GoldStats(dict(sorted(histogram.items())), total, mean)
