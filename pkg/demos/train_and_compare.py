"""Train a small scorer on a synthetic corpus and compare it with length baselines.

Takes well under a minute; the full-size run uses the same calls with the
default corpus size and three seeds.
"""

import logging

from dppanswer import SynthConfig, TrainConfig, evaluate, format_table, generate_synthetic, predict, split_corpus
from dppanswer.baselines import random_k, wordnum_k
from dppanswer.training import select_best, train_seeds

logging.basicConfig(level=logging.INFO, format="%(message)s")

corpus = generate_synthetic(SynthConfig(n_questions=600, seed=3))
train, dev, test = split_corpus(corpus, seed=0)

cfg = TrainConfig(epochs=3, seeds=1)
model = select_best(train_seeds(train, dev, cfg)).model(cfg)

golds = {inst.question_id: inst.gold for inst in test}
rows = [("DPP", evaluate({p.question_id: p.answer_ids for p in predict(model, test)}, golds))]
for name, pick in [("random-1", lambda i: random_k(i, 1)), ("wordnum-1", lambda i: wordnum_k(i, 1)),
                   ("wordnum-2", lambda i: wordnum_k(i, 2))]:
    rows.append((name, evaluate({i.question_id: i.ids_of(pick(i)) for i in test}, golds)))
print(format_table(rows))
