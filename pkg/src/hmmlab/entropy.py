"""Exact block entropies and the entropy-rate sandwich.

Words of positive stationary probability are enumerated one length at a
time. Every word carries its forward matrix ``F_w = T^(x1) ... T^(xt)``, so
row ``i`` of ``F_w`` is the unnormalized belief after emitting ``w`` from
state ``i``. From a single level ``t`` we read off

* the block entropy ``H(X_1^t)``,
* the next-symbol entropy ``h(t+1) = H(X_{t+1} | X_1^t)``, and
* the state-conditioned lower bound ``L(t) = H(X_{t+1} | X_1^t, S_0)``,

and ``L(t) <= h <= h(t+1)`` brackets the entropy rate. Entropies are in bits.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import (
    EdgeEmittingHmm,
    Model,
    as_edge,
    stationary_distribution,
    support_graph,
)
from .errors import BudgetExceeded, InsufficientData, NotUnifilar

DEFAULT_BUDGET = 2_000_000
DEGENERATE_GAP = 1e-13


def node_budget(budget: Optional[int] = None) -> int:
    """Enumeration cap: explicit argument, else ``HMMLAB_BUDGET``, else 2e6."""
    if budget is not None:
        return int(budget)
    env = os.environ.get("HMMLAB_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def plogp_sum(p: np.ndarray, axis=None) -> np.ndarray:
    """``-sum p log2 p`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > 0, p, 1.0)
    return -np.sum(np.where(p > 0, p * np.log2(safe), 0.0), axis=axis)


def entropy(dist: Sequence[float]) -> float:
    return float(plogp_sum(np.asarray(dist, dtype=float)))


def _cond_entropy(joint: np.ndarray, marginal: np.ndarray) -> np.ndarray:
    """``-sum_x q_x log2(q_x / m)`` along the last axis, zero where ``q_x = 0``."""
    m = np.broadcast_to(marginal[..., None], joint.shape)
    ratio = np.where(joint > 0, joint / np.where(m > 0, m, 1.0), 1.0)
    return -np.sum(np.where(joint > 0, joint * np.log2(ratio), 0.0), axis=-1)


@dataclass
class WordLevel:
    """All words of ``L_t(M)`` in lexicographic order.

    ``words[w]`` holds symbol indices, ``forward[w]`` the matrix ``F_w`` and
    ``prob[w]`` the stationary probability ``P(w)``.
    """

    t: int
    words: np.ndarray
    forward: np.ndarray
    prob: np.ndarray

    def __len__(self) -> int:
        return len(self.prob)

    @property
    def start_prob(self) -> np.ndarray:
        """``P_i(w)``, shape (words, states)."""
        return self.forward.sum(axis=2)


def iter_levels(model: Model, t_max: int, budget: Optional[int] = None,
                pi: Optional[np.ndarray] = None) -> Iterator[WordLevel]:
    """Yield the word levels ``t = 0 .. t_max`` (level 0 holds the empty word)."""
    edge = as_edge(model)
    cap = node_budget(budget)
    if pi is None:
        pi = stationary_distribution(edge)
    n, m = edge.n_states, edge.n_symbols
    level = WordLevel(0, np.zeros((1, 0), dtype=np.int64), np.eye(n)[None], np.ones(1))
    yield level
    nodes = 1
    for t in range(1, t_max + 1):
        k = len(level)
        if nodes + _count_next(level, edge, pi) > cap:
            raise BudgetExceeded(
                f"enumerating length-{t} words exceeds the node budget of {cap}")
        fwd = np.einsum("wij,xjk->wxik", level.forward, edge.matrices).reshape(k * m, n, n)
        prob = np.einsum("i,wij->w", pi, fwd)
        keep = prob > 0
        words = np.concatenate(
            [np.repeat(level.words, m, axis=0), np.tile(np.arange(m), k)[:, None]], axis=1)
        level = WordLevel(t, words[keep], fwd[keep], prob[keep])
        nodes += len(level)
        yield level


def _count_next(level: WordLevel, edge: EdgeEmittingHmm, pi: np.ndarray) -> int:
    alpha = pi @ level.forward
    return int(np.count_nonzero(alpha @ edge.symbol_row_sums > 0))


def word_level(model: Model, t: int, budget: Optional[int] = None) -> WordLevel:
    for level in iter_levels(model, t, budget):
        pass
    return level


def enumerate_words(model: Model, t: int, budget: Optional[int] = None):
    """Yield ``(word, P(w), forward matrix)`` for every word of ``L_t(M)``."""
    edge = as_edge(model)
    level = word_level(edge, t, budget)
    for w, p, f in zip(level.words, level.prob, level.forward):
        yield edge.word_ids(w), float(p), f


@dataclass
class EntropyTable:
    """Per-length entropy quantities for ``t = 1 .. t_max``.

    ``h_upper[t]`` is ``h(t+1)``; ``gap = h_upper - lower``.
    """

    t: np.ndarray
    block_entropy: np.ndarray
    h: np.ndarray
    lower: np.ndarray
    h_upper: np.ndarray
    word_count: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.h_upper - self.lower

    def row(self, t: int) -> int:
        return int(t) - 1

    def interval(self, t: int) -> tuple[float, float]:
        r = self.row(t)
        return float(self.lower[r]), float(self.h_upper[r])

    def csv_rows(self):
        yield ("t", "block_entropy", "h", "lower", "gap", "word_count")
        for r in range(len(self.t)):
            yield (int(self.t[r]), repr(float(self.block_entropy[r])), repr(float(self.h[r])),
                   repr(float(self.lower[r])), repr(float(self.gap[r])), int(self.word_count[r]))


def h_estimates(model: Model, t_max: int, budget: Optional[int] = None) -> EntropyTable:
    """Exact entropy table for ``t = 1 .. t_max``.

    ``h(t)`` is the entropy of the next symbol given ``t - 1`` observed
    symbols, averaged over words; the block entropies are computed separately,
    so the chain rule ``H(X_1^t) = sum h`` is a genuine consistency check.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    edge = as_edge(model)
    pi = stationary_distribution(edge)
    rows = edge.symbol_row_sums
    block, cond, lower, count = [], [], [], []
    for level in iter_levels(edge, t_max, budget, pi):
        alpha = pi @ level.forward                      # (W, S): P(w, S_t = k)
        joint = alpha @ rows                            # (W, X): P(w x)
        cond.append(float(np.sum(_cond_entropy(joint, level.prob))))
        per_start = level.forward @ rows                # (W, S, X): P_i(w x)
        lower_terms = _cond_entropy(per_start, level.start_prob)   # (W, S)
        lower.append(float(np.sum(lower_terms @ pi)))
        block.append(float(plogp_sum(level.prob)))
        count.append(len(level))
    ts = np.arange(1, t_max + 1)
    return EntropyTable(
        t=ts,
        block_entropy=np.array(block[1:]),
        h=np.array(cond[:-1]),
        lower=np.array(lower[1:]),
        h_upper=np.array(cond[1:]),
        word_count=np.array(count[1:]),
    )


def entropy_interval(model: Model, t: int, budget: Optional[int] = None) -> tuple[float, float]:
    """Certified bracket ``[L(t), h(t+1)]`` around the entropy rate."""
    return h_estimates(model, t, budget).interval(t)


def is_unifilar(model: Model) -> bool:
    top = support_graph(as_edge(model))
    return all(bin(mask).count("1") <= 1 for row in top.succ for mask in row)


def unifilar_exact_entropy(model: Model) -> float:
    """Entropy rate of a unifilar model: ``sum_i pi_i H(P_i(X_0))``."""
    edge = as_edge(model)
    if not is_unifilar(edge):
        raise NotUnifilar("some state has two successors on the same symbol")
    pi = stationary_distribution(edge)
    return float(pi @ plogp_sum(edge.symbol_row_sums, axis=1))


def fit_convergence_rate(table: EntropyTable, window: tuple[int, int]) -> float:
    """Fit ``gap(t) ~ c * rho^t`` over ``t`` in ``window`` (inclusive).

    Least squares on ``log2 gap``; returns ``rho = 2**slope``. A gap at the
    numerical floor means the bracket has closed, and the rate is 0.
    """
    a, b = window
    ts = [t for t in table.t if a <= t <= b]
    if len(ts) < 3:
        raise InsufficientData(f"need at least 3 points in window {a}..{b}, have {len(ts)}")
    gaps = np.array([table.gap[table.row(t)] for t in ts])
    if np.any(gaps <= DEGENERATE_GAP):
        return 0.0
    slope = np.polyfit(np.array(ts, dtype=float), np.log2(gaps), 1)[0]
    return float(2.0 ** slope)
