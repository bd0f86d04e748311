"""Monte Carlo census of random labeled topologies.

Sample ``k`` of a run with seed ``s`` draws from its own generator seeded with
``s ^ k``, so samples can be evaluated in any order or in parallel and the
report stays bit-for-bit reproducible.
"""

from __future__ import annotations

import math
import string
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import EdgeEmittingHmm, Topology, irreducible
from .errors import DeadState, RejectionBudgetExceeded
from .structure import is_path_mergeable

DEFAULT_SEED = 1729
OVERLAY_RATE = 0.931
Z95 = 1.959963984540054


def symbol_names(m: int) -> tuple[str, ...]:
    if m <= 26:
        return tuple(string.ascii_lowercase[:m])
    return tuple(f"x{k}" for k in range(1, m + 1))


def random_topology(n: int, m: int, rng: np.random.Generator) -> Topology:
    """Every one of the ``n * n * m`` labeled edges is kept with probability 1/2."""
    if n < 1 or m < 1:
        raise ValueError("need at least one state and one symbol")
    states = tuple(str(k) for k in range(1, n + 1))
    alphabet = symbol_names(m)
    keep = rng.random((n, n, m)) < 0.5
    edges = frozenset((states[i], states[j], alphabet[x]) for i, j, x in zip(*np.nonzero(keep)))
    return Topology(states, alphabet, edges)


def random_hmm(topology: Topology, rng: np.random.Generator) -> EdgeEmittingHmm:
    """Uniform(0, 1) weights on each state's outgoing edges, normalized per state.

    Symbols without any edge are dropped from the alphabet.
    """
    n = len(topology.states)
    by_state: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, j, x in topology.edges:
        by_state[topology.state_index(i)].append((topology.symbol_index(x), topology.state_index(j)))
    mats = np.zeros((len(topology.alphabet), n, n))
    for i, out in enumerate(by_state):
        if not out:
            raise DeadState(f"state {topology.states[i]!r} has no outgoing edge")
        out.sort()
        w = rng.random(len(out))
        w /= w.sum()
        for (x, j), p in zip(out, w):
            mats[x, i, j] = p
    used = [x for x in range(len(topology.alphabet)) if mats[x].any()]
    return EdgeEmittingHmm(topology.states, tuple(topology.alphabet[x] for x in used), mats[used])


def sample_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(seed ^ k)


def _classify_sample(args) -> tuple[bool, bool]:
    n, m, seed, k = args
    top = random_topology(n, m, sample_rng(seed, k))
    if not irreducible(top):
        return False, False
    return True, is_path_mergeable(top)


@dataclass(frozen=True)
class CensusReport:
    n: int
    m: int
    samples_drawn: int
    irreducible_count: int
    path_mergeable_count: int
    seed: int
    ci_low: float
    ci_high: float

    @property
    def fraction(self) -> float:
        return self.path_mergeable_count / self.irreducible_count

    @property
    def ci95(self) -> float:
        """Half-width of the 95% interval."""
        return (self.ci_high - self.ci_low) / 2


def normal_interval(k: int, n: int) -> tuple[float, float]:
    f = k / n
    half = Z95 * math.sqrt(f * (1 - f) / n)
    return f - half, f + half


def exact_interval(k: int, n: int) -> tuple[float, float]:
    """Clopper-Pearson interval."""
    from scipy.stats import beta

    lo = 0.0 if k == 0 else float(beta.ppf(0.025, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(0.975, k + 1, n - k))
    return lo, hi


def census(n: int, m: int, target_irreducible: int, seed: int = DEFAULT_SEED,
           max_draws: Optional[int] = None, threads: int = 1,
           exact_ci: bool = False) -> CensusReport:
    """Rejection-sample ``target_irreducible`` irreducible topologies and count
    the path-mergeable ones."""
    if target_irreducible < 1:
        raise ValueError("target_irreducible must be positive")
    if max_draws is None:
        max_draws = 1000 * target_irreducible
    batch = max(64, 8 * threads) if threads > 1 else 256
    pool = ProcessPoolExecutor(threads) if threads > 1 else None
    drawn = accepted = mergeable = 0
    try:
        while accepted < target_irreducible:
            if drawn >= max_draws:
                raise RejectionBudgetExceeded(
                    f"only {accepted} of {target_irreducible} irreducible topologies "
                    f"after {drawn} draws")
            ks = range(drawn, min(drawn + batch, max_draws))
            jobs = [(n, m, seed, k) for k in ks]
            results = pool.map(_classify_sample, jobs, chunksize=8) if pool else map(_classify_sample, jobs)
            # consume in sample order so the stopping point never depends on scheduling
            for irr, merge in results:
                drawn += 1
                if irr:
                    accepted += 1
                    mergeable += merge
                    if accepted == target_irreducible:
                        break
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    lo, hi = (exact_interval if exact_ci else normal_interval)(mergeable, accepted)
    return CensusReport(n, m, drawn, accepted, mergeable, seed, lo, hi)


def typicality_overlay(ns: Sequence[int], fractions: Sequence[float],
                       rate: float = OVERLAY_RATE) -> list[float]:
    """Curve ``1 - c * rate^n`` with ``c`` fitted at the smallest ``n``."""
    n0 = min(ns)
    f0 = fractions[list(ns).index(n0)]
    c = (1 - f0) / rate ** n0
    return [1 - c * rate ** n for n in ns]
