"""Turning crowd annotations into gold answer sets."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

MIN_NUM = 2
MIN_BEST_LEN = 110
MIN_ANSWERS = 5


@dataclass(frozen=True)
class AnnotationSheet:
    question_id: str
    selections: tuple[frozenset, ...]
    answer_ids: tuple[str, ...] | None = None

    @classmethod
    def from_lists(cls, question_id, selections, answer_ids=None):
        return cls(
            question_id,
            tuple(frozenset(str(a) for a in sel) for sel in selections),
            None if answer_ids is None else tuple(answer_ids),
        )


@dataclass(frozen=True)
class Rejected:
    reason: str  # "conflict" | "no-agreement"

    def __bool__(self):
        return False


def _sort_key(answer_order):
    def key(entry):
        s, count = entry
        ids = sorted(s, key=answer_order) if answer_order else sorted(s)
        return (-count, len(s), [answer_order(a) for a in ids] if answer_order else ids)

    return key


def tally(sheet):
    """Aggregate worker selections into ``[(answer set, votes), ...]``.

    Sorted by votes descending, then set size ascending, then by member
    ids (in answer order when the sheet knows it).
    """
    known = None if sheet.answer_ids is None else set(sheet.answer_ids)
    for sel in sheet.selections:
        if not sel:
            raise ValueError(f"question {sheet.question_id!r}: empty worker selection")
        if known is not None and not sel <= known:
            raise ValueError(f"question {sheet.question_id!r}: selection references unknown answer ids {sorted(sel - known)}")
    order = None
    if sheet.answer_ids is not None:
        pos = {a: i for i, a in enumerate(sheet.answer_ids)}
        order = pos.__getitem__
    counts = Counter(sheet.selections)
    return sorted(counts.items(), key=_sort_key(order))


def _conflicting(a, b):
    return not (a <= b or b <= a)


def select_gold(votes, min_num=MIN_NUM):
    """Gold answer set from a sorted tally, or a :class:`Rejected` marker.

    Sets chosen by fewer than ``min_num`` workers are ignored.  The
    instance is rejected if nothing survives, or if two of the most-voted
    sets conflict (neither contains the other).  Otherwise the gold set
    starts from the most-voted set and grows to every later set that
    contains it; the first set that does not contain it fixes the last
    vote level that is still examined.
    """
    surviving = [(frozenset(s), n) for s, n in votes if n >= min_num]
    if not surviving:
        return Rejected("no-agreement")
    top = surviving[0][1]
    leaders = [s for s, n in surviving if n == top]
    if any(_conflicting(a, b) for i, a in enumerate(leaders) for b in leaders[i + 1:]):
        return Rejected("conflict")

    gold = surviving[0][0]
    end_num = None
    for s, n in surviving[1:]:
        if end_num is not None and n != end_num:
            break
        if s >= gold:
            gold = s
        elif end_num is None:
            end_num = n
    return gold


def aggregate(sheet, min_num=MIN_NUM):
    return select_gold(tally(sheet), min_num)


def filter_instance(inst, min_best_len=MIN_BEST_LEN, min_answers=MIN_ANSWERS):
    """Keep questions with enough answers and a long enough best answer.

    A question without a flagged best answer never passes.
    """
    best = inst.best_index
    if best is None:
        return False
    return len(inst.answers[best].text) >= min_best_len and inst.n >= min_answers
