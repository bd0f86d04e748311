"""Block models: length-``n`` output blocks treated as single symbols."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

from .core import (
    EdgeEmittingHmm,
    Model,
    as_edge,
    irreducible,
    period,
    stationary_distribution,
    support_graph,
    word_probability,
)
from .entropy import word_level
from .errors import BudgetExceeded, NotIrreducible, PeriodClash
from .structure import FlagAssignment, flag_symbols

DEFAULT_N_MAX = 8
BLOCK_ALPHABET_CAP = 5000
BLOCK_TOL = 1e-10


def block_symbol(symbols) -> str:
    symbols = list(symbols)
    sep = "" if all(len(x) == 1 for x in symbols) else "."
    return sep.join(symbols)


@dataclass(frozen=True, eq=False)
class BlockModel:
    base: EdgeEmittingHmm
    n: int
    model: EdgeEmittingHmm
    blocks: tuple[tuple[str, ...], ...]
    base_period: int

    @property
    def coprime(self) -> bool:
        """Whether ``gcd(n, per(M)) = 1``; otherwise ``M^n`` may be reducible."""
        return math.gcd(self.n, self.base_period) == 1

    @property
    def warning(self) -> Optional[str]:
        if self.coprime:
            return None
        return (f"gcd(n={self.n}, period={self.base_period}) != 1: "
                "the block model need not be irreducible")


def block_model(model: Model, n: int, cap: int = BLOCK_ALPHABET_CAP) -> BlockModel:
    """Block model ``M^n`` over the positive-probability words of length ``n``.

    ``Q^(w)[i, j] = P_i(X_0^{n-1} = w, S_n = j)``; block symbols are the words
    spelled out as strings, in lexicographic order.
    """
    if n < 1:
        raise ValueError("block length must be at least 1")
    edge = as_edge(model)
    top = support_graph(edge)
    if not irreducible(top):
        raise NotIrreducible("block models are built from irreducible models")
    per = period(top)
    level = word_level(edge, n)
    if len(level) > cap:
        raise BudgetExceeded(f"|L_{n}| = {len(level)} exceeds the block alphabet cap {cap}")
    blocks = tuple(edge.word_ids(w) for w in level.words)
    alphabet = tuple(block_symbol(b) for b in blocks)
    if len(set(alphabet)) != len(alphabet):
        raise ValueError("block symbols collide; rename base symbols")
    bm = EdgeEmittingHmm(edge.states, alphabet, level.forward.copy())
    return BlockModel(edge, n, bm, blocks, per)


def check_block_consistency(model: Model, n: int, t: int) -> float:
    """Largest ``|P_M(w_1 ... w_t) - P_{M^n}(w_1, ..., w_t)|`` over block words.

    Every word in ``W^t`` is visited, including zero-probability ones.
    """
    edge = as_edge(model)
    per = period(support_graph(edge))
    if math.gcd(n, per) != 1:
        raise PeriodClash(f"gcd(n={n}, period={per}) != 1")
    bm = block_model(edge, n)
    pi_base = stationary_distribution(edge)
    pi_block = stationary_distribution(bm.model)
    worst = 0.0
    for combo in itertools.product(range(len(bm.blocks)), repeat=t):
        base_word = [x for k in combo for x in bm.blocks[k]]
        block_word = [bm.model.alphabet[k] for k in combo]
        p = word_probability(edge, pi_base, base_word)
        q = word_probability(bm.model, pi_block, block_word)
        worst = max(worst, abs(p - q))
    return worst


@dataclass(frozen=True)
class FlagBlockResult:
    n: Optional[int]
    flags: Optional[FlagAssignment]
    tried: tuple[int, ...]
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.n is not None


def minimal_flag_block(model: Model, n_max: int = DEFAULT_N_MAX,
                       cap: int = BLOCK_ALPHABET_CAP) -> FlagBlockResult:
    """Least ``n <= n_max`` coprime to the period with ``M^n`` flag-state.

    A miss is inconclusive: larger ``n`` may still work.
    """
    edge = as_edge(model)
    top = support_graph(edge)
    if not irreducible(top):
        raise NotIrreducible("minimal_flag_block needs an irreducible model")
    per = period(top)
    tried = []
    for n in range(1, n_max + 1):
        if math.gcd(n, per) != 1:
            continue
        tried.append(n)
        bm = block_model(edge, n, cap)
        flags = flag_symbols(support_graph(bm.model))
        if flags.flag_state:
            return FlagBlockResult(n, flags, tuple(tried))
    return FlagBlockResult(None, None, tuple(tried),
                           f"no flag-state block model for n <= {n_max} (inconclusive)")

