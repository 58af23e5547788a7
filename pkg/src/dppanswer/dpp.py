"""Exact DPP probabilities, the training loss, and MAP inference."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import numerics

DEFAULT_EXHAUSTIVE_CAP = 20
LOGDET_FLOOR = -1e6
TIE_ATOL = 1e-12
_CHUNK = 32768


def _subset(y, n):
    idx = sorted(int(i) for i in y)
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate indices in subset {list(y)}")
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise IndexError(f"subset {idx} out of range for ground set of size {n}")
    return idx


def log_normalizer(k):
    """log det(L + I)."""
    return numerics.logdet_pd(k.L + np.eye(k.n))


def _logdet_sub(L, idx):
    sub = L[np.ix_(idx, idx)]
    try:
        return numerics.logdet_pd(sub)
    except numerics.NotPositiveDefiniteError:
        d = numerics.det(sub)
        return float(np.log(d)) if d > 0.0 else -np.inf


def subset_log_prob(k, y):
    """log P(Y) = log det(L_Y) - log det(L + I); the empty set is allowed."""
    idx = _subset(y, k.n)
    return _logdet_sub(k.L, idx) - log_normalizer(k)


def _gold_logdet(k, gold):
    idx = _subset(gold, k.n)
    if not idx:
        raise ValueError("gold set must be non-empty")
    sub = k.L[np.ix_(idx, idx)]
    try:
        return idx, numerics.logdet_pd(sub), sub
    except numerics.NotPositiveDefiniteError:
        return idx, LOGDET_FLOOR, None


def nll(k, gold):
    """Negative log-likelihood of the gold subset.

    A gold submatrix that is not positive definite contributes the floor
    value ``LOGDET_FLOOR`` instead of ``-inf``.
    """
    _, ld, _ = _gold_logdet(k, gold)
    return -ld + log_normalizer(k)


def nll_grad_L(k, gold):
    """Gradient of :func:`nll` with respect to the entries of ``L``.

    ``(L + I)^-1`` minus ``(L_gold)^-1`` scattered onto the gold block.
    Floored gold terms contribute no gradient.
    """
    idx, _, sub = _gold_logdet(k, gold)
    g = numerics.inverse(k.L + np.eye(k.n))
    if sub is not None:
        g[np.ix_(idx, idx)] -= numerics.inverse(sub)
    return 0.5 * (g + g.T)


@lru_cache(maxsize=256)
def _combinations(n, r):
    return np.array(list(itertools.combinations(range(n), r)), dtype=np.intp).reshape(-1, r)


def subset_logdets(L, r):
    """log det(L_Y) for every size-``r`` subset, in lexicographic order."""
    n = L.shape[0]
    combos = _combinations(n, r)
    out = np.empty(len(combos))
    for start in range(0, len(combos), _CHUNK):
        c = combos[start:start + _CHUNK]
        out[start:start + len(c)] = numerics.batched_logdet_pd(L[c[:, :, None], c[:, None, :]])
    return combos, out


def map_exhaustive(k, cap=DEFAULT_EXHAUSTIVE_CAP):
    """Most probable non-empty subset by full enumeration.

    Ties (within ``TIE_ATOL``) go to the smaller subset, then to the
    lexicographically smallest index list.
    """
    n = k.n
    if n > cap:
        raise ValueError(f"ground set of size {n} exceeds exhaustive cap {cap}; use map_greedy")
    per_size = [subset_logdets(k.L, r) for r in range(1, n + 1)]
    best = max(float(np.max(vals)) for _, vals in per_size)
    for combos, vals in per_size:
        hits = np.flatnonzero(vals >= best - TIE_ATOL)
        if hits.size:
            return tuple(int(i) for i in combos[hits[0]])
    raise AssertionError("unreachable")


def map_greedy(k):
    """Greedy log-det maximization with incremental Cholesky updates.

    Adds the item with the largest positive gain in log det(L_Y) until no
    gain is positive.  Falls back to the singleton with the largest
    diagonal entry when no item alone has det above 1.
    """
    L = k.L
    n = k.n
    resid = np.diag(L).astype(float).copy()
    rows = np.zeros((0, n))
    chosen = []
    free = np.ones(n, dtype=bool)
    while free.any():
        j = int(np.argmax(np.where(free, resid, -np.inf)))
        if not resid[j] > 1.0:
            break
        chosen.append(j)
        free[j] = False
        e = (L[j] - rows.T @ rows[:, j]) / np.sqrt(resid[j])
        rows = np.vstack([rows, e])
        resid = resid - e * e
    if not chosen:
        return (int(np.argmax(np.diag(L))),)
    return tuple(sorted(chosen))


def map_select(k, cap=DEFAULT_EXHAUSTIVE_CAP):
    """MAP subset plus the method used: exhaustive up to ``cap`` items, greedy beyond."""
    if k.n <= cap:
        return map_exhaustive(k, cap), "exhaustive"
    return map_greedy(k), "greedy"
