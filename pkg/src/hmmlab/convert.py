"""Conversions between state-emitting and edge-emitting HMMs, plus
bounded-length checks that two models agree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    EdgeEmittingHmm,
    Model,
    StateEmittingHmm,
    as_edge,
    irreducible,
    stationary_distribution,
    support_graph,
)
from .errors import NotIrreducible

EQUIVALENCE_TOL = 1e-10


def state_to_edge(model: StateEmittingHmm) -> EdgeEmittingHmm:
    """``T'^(x)[i, j] = T[i, j] * O[j, x]``; the symbol is emitted on entry to ``j``."""
    mats = model.transition[None, :, :] * model.observation.T[:, None, :]
    return EdgeEmittingHmm(model.states, model.alphabet, mats)


def pair_state_id(state: str, symbol: str) -> str:
    return f"({state},{symbol})"


def edge_to_state(model: EdgeEmittingHmm) -> StateEmittingHmm:
    """Functional state-emitting model on the pairs ``(i, x)`` with ``P_i(x) > 0``."""
    emit = model.symbol_row_sums            # emit[i, x] = sum_j T^(x)[i, j]
    pairs = [(i, x) for i in range(model.n_states) for x in range(model.n_symbols)
             if emit[i, x] > 0]
    n = len(pairs)
    t = np.zeros((n, n))
    o = np.zeros((n, model.n_symbols))
    for a, (i, x) in enumerate(pairs):
        o[a, x] = 1.0
        for b, (j, y) in enumerate(pairs):
            t[a, b] = model.matrices[x, i, j] / emit[i, x] * emit[j, y]
    states = [pair_state_id(model.states[i], model.alphabet[x]) for i, x in pairs]
    return StateEmittingHmm(tuple(states), model.alphabet, t, o)


@dataclass(frozen=True)
class EquivalenceReport:
    max_len: int
    max_discrepancy: float
    worst_word: tuple[str, ...]
    first_failure: Optional[tuple[str, ...]]

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= EQUIVALENCE_TOL


def check_output_equivalence(m1: Model, m2: Model, max_len: int) -> EquivalenceReport:
    """Compare stationary word probabilities of two models for ``|w| <= max_len``.

    Words are visited by length, then in lexicographic order over the union of
    both alphabets (first model's order, then any new symbols of the second).
    Branches where both models assign probability zero are pruned.
    """
    for m in (m1, m2):
        if not irreducible(support_graph(m)):
            raise NotIrreducible("output equivalence needs irreducible models")
    e1, e2 = as_edge(m1), as_edge(m2)
    alphabet = list(e1.alphabet) + [x for x in e2.alphabet if x not in e1.alphabet]

    def mats(e):
        zero = np.zeros((e.n_states, e.n_states))
        return [e.matrices[e.symbol_index(x)] if x in e.alphabet else zero for x in alphabet]

    a1, a2 = mats(e1), mats(e2)
    level = [((), stationary_distribution(m1), stationary_distribution(m2))]
    worst, worst_word, first = 0.0, (), None
    for _ in range(max_len):
        nxt = []
        for word, v1, v2 in level:
            for k, x in enumerate(alphabet):
                u1, u2 = v1 @ a1[k], v2 @ a2[k]
                p1, p2 = u1.sum(), u2.sum()
                if p1 == 0 and p2 == 0:
                    continue
                w = word + (x,)
                diff = abs(p1 - p2)
                if diff > worst:
                    worst, worst_word = float(diff), w
                if first is None and diff > EQUIVALENCE_TOL:
                    first = w
                nxt.append((w, u1, u2))
        level = nxt
    return EquivalenceReport(max_len, worst, worst_word, first)


def check_delta_equivalence(model: StateEmittingHmm, max_len: int) -> bool:
    """Check that ``delta`` computed directly on ``(T, O)`` matches ``delta``
    of the converted edge-emitting model for every state and word up to
    ``max_len``. Enumeration is pruned once every state's set is empty on
    both sides."""
    converted = support_graph(state_to_edge(model))
    tmask = model.transition > 0
    omask = model.observation > 0
    n = model.n_states
    # direct side: boolean matrix, row i is delta_i(w); converted side: bitmasks
    level = [(np.eye(n, dtype=bool), tuple(1 << i for i in range(n)))]
    for _ in range(max_len):
        nxt = []
        for direct, masks in level:
            for x in range(model.n_symbols):
                d = (direct.astype(int) @ tmask.astype(int) > 0) & omask[:, x][None, :]
                c = tuple(converted.step(m, x) for m in masks)
                for i in range(n):
                    bits = sum(1 << j for j in np.nonzero(d[i])[0])
                    if bits != c[i]:
                        return False
                if d.any() or any(c):
                    nxt.append((d, c))
        level = nxt
    return True
