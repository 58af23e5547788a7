"""Diverse answer-set selection with determinantal point processes."""

from .aggregation import AnnotationSheet, Rejected, aggregate, filter_instance, select_gold, tally
from .corpus import Answer, CorpusError, Instance, load_corpus, save_corpus, split_corpus
from .dpp import map_exhaustive, map_greedy, map_select, nll, nll_grad_L, subset_log_prob
from .evaluation import EvalReport, evaluate, format_table, gold_stats, gold_stats_from_histogram, harmonic_f1
from .kernel import Kernel, build_kernel, project_psd, project_psd_backward
from .predict import Prediction, predict
from .scorer import Model, ScorerParams
from .synthetic import SynthConfig, generate_synthetic
from .training import TrainConfig, select_best, train_one, train_seeds

__version__ = "0.1.0"
