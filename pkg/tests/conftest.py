import numpy as np
import pytest

from dppanswer import dpp
from dppanswer.corpus import Answer, Instance
from dppanswer.features import InstanceFeatures
from dppanswer.kernel import build_kernel
from dppanswer.training import kernel_for


def random_sim(rng, n, low=0.0, high=1.0):
    s = rng.uniform(low, high, size=(n, n))
    s = np.triu(s, 1)
    s = s + s.T
    np.fill_diagonal(s, 1.0)
    return s


def random_pd_kernel(rng, n, low=0.0, high=0.3):
    """Product kernel whose similarity matrix is diagonally dominant (so PD)."""
    imp = np.exp(rng.normal(0.0, 0.5, size=n))
    sim = random_sim(rng, n, low, high / max(1, n - 1))
    return build_kernel(imp, sim)


def random_spd(rng, n, shift=1.0):
    a = rng.normal(size=(n, n))
    return a @ a.T + shift * np.eye(n)


def make_instance(texts, qid="q1", question="how do birds sleep", gold=None, best=None):
    answers = tuple(Answer(f"a{i + 1}", t, is_best=(i == best)) for i, t in enumerate(texts))
    return Instance(qid, question, answers, None if gold is None else tuple(gold))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_features(rng, n, answer_dim=4, pair_dim=4):
    pair_index = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.intp).reshape(-1, 2)
    return InstanceFeatures(
        answers=rng.normal(size=(n, answer_dim)),
        pairs=rng.normal(size=(len(pair_index), pair_dim)),
        pair_index=pair_index,
    )


def finite_difference_gradient(params, feats, gold, psd_floor=1e-6, h=1e-5):
    """Central differences of the end-to-end loss over every scorer weight."""
    theta = params.to_vector()
    out = np.empty_like(theta)
    for i in range(theta.size):
        step = np.zeros_like(theta)
        step[i] = h
        up = dpp.nll(kernel_for(params.with_vector(theta + step), feats, psd_floor)[1], gold)
        down = dpp.nll(kernel_for(params.with_vector(theta - step), feats, psd_floor)[1], gold)
        out[i] = (up - down) / (2 * h)
    return out


def max_relative_error(analytic, numeric, floor=1e-6):
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)))


# criterion number -> one-line verdict, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[num])
