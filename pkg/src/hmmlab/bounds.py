"""Convergence constants of flag-state models and numerical checks of the
inequalities behind the exponential convergence of ``h(t)``."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .core import (
    EdgeEmittingHmm,
    Model,
    Topology,
    as_edge,
    irreducible,
    stationary_distribution,
    support_graph,
)
from .entropy import entropy, fit_convergence_rate, h_estimates, iter_levels
from .errors import EpsilonTooLarge, LengthMismatch, NotFlagState, NotIrreducible, SearchTooLarge
from .structure import FlagAssignment, flag_options

CHECK_SLACK = 1e-12
MAX_SLACK = 1e-12
OPTIMIZE_CAP = 10_000
RATE_TOL = 0.02

Flags = Union[FlagAssignment, Mapping[str, str]]


@dataclass(frozen=True)
class BoundConstants:
    flags: FlagAssignment
    p: dict[str, float]
    q: dict[str, float]
    p_star: float
    q_star: float
    r_star: float
    eta: float
    alpha1: float
    alpha2: float
    alpha: float
    t0: int

    def to_json(self) -> dict:
        return {
            "flags": dict(self.flags.chosen),
            "p": self.p, "q": self.q,
            "p_star": self.p_star, "q_star": self.q_star, "r_star": self.r_star,
            "eta": self.eta, "alpha1": self.alpha1, "alpha2": self.alpha2,
            "alpha": self.alpha, "t0": self.t0,
        }


def _assignment(top: Topology, flags: Flags) -> FlagAssignment:
    options = flag_options(top)
    chosen = dict(flags.chosen if isinstance(flags, FlagAssignment) else flags)
    chosen = {str(k): str(v) for k, v in chosen.items()}
    for s in top.states:
        if s not in chosen:
            raise NotFlagState(f"state {s!r} has no flag symbol")
        if chosen[s] not in options[s]:
            raise NotFlagState(f"{chosen[s]!r} is not a flag symbol for state {s!r}")
    return FlagAssignment({s: chosen[s] for s in top.states}, options)


def t0_from_alpha2(alpha2: float) -> int:
    """``1`` when ``alpha2 = 0``, else the least ``t`` with ``alpha2^t <= 1/e``."""
    if alpha2 == 0:
        return 1
    return max(1, math.ceil(-1.0 / math.log(alpha2)))


def bound_constants(model: Model, flags: Flags) -> BoundConstants:
    edge = as_edge(model)
    top = support_graph(edge)
    if not irreducible(top):
        raise NotIrreducible("constants need an irreducible model")
    assignment = _assignment(top, flags)
    pi = stationary_distribution(edge)
    emit = edge.symbol_row_sums
    p, q = {}, {}
    for j, s in enumerate(edge.states):
        y = edge.symbol_index(assignment.chosen[s])
        mat = edge.matrices[y]
        p[s] = float(pi @ mat[:, j] / pi[j])
        gens = emit[:, y] > 0
        q[s] = float(np.min(mat[gens, j] / emit[gens, y]))
    n = edge.n_states
    p_star, q_star = min(p.values()), min(q.values())
    r_star = float(np.min(pi) / np.max(pi))
    eta = p_star * r_star / (2 * n)
    alpha1 = math.exp(-(p_star * r_star) ** 2 / (2 * n * n))
    alpha2 = (1.0 - q_star ** 2) ** eta
    return BoundConstants(assignment, p, q, p_star, q_star, r_star, eta,
                          alpha1, alpha2, max(alpha1, alpha2), t0_from_alpha2(alpha2))


def choose_flags(model_or_topology, strategy: str = "lex") -> FlagAssignment:
    """Pick one flag per state.

    ``lex`` takes the first flag in alphabet order. ``optimize`` needs a model
    and searches every assignment for the least ``alpha``; ties go to the
    lexicographically first assignment.
    """
    is_top = isinstance(model_or_topology, Topology)
    top = model_or_topology if is_top else support_graph(model_or_topology)
    options = flag_options(top)
    bare = [s for s, v in options.items() if not v]
    if bare:
        raise NotFlagState(f"states without a flag symbol: {bare}")
    if strategy == "lex":
        return FlagAssignment({s: v[0] for s, v in options.items()}, options)
    if strategy != "optimize":
        raise ValueError(f"unknown flag strategy {strategy!r}")
    if is_top:
        raise ValueError("the optimize strategy needs transition probabilities, not a topology")
    size = math.prod(len(v) for v in options.values())
    if size > OPTIMIZE_CAP:
        raise SearchTooLarge(f"{size} flag assignments exceed the cap of {OPTIMIZE_CAP}")
    best, best_alpha = None, math.inf
    for combo in itertools.product(*options.values()):
        chosen = dict(zip(options, combo))
        a = bound_constants(model_or_topology, chosen).alpha
        if a < best_alpha * (1 - 1e-12):
            best, best_alpha = chosen, a
    return FlagAssignment(best, options)


# --------------------------------------------------------------------------
# good words

@dataclass(frozen=True)
class GtReport:
    t: int
    mass_good: float
    mass_bad: float
    counts: dict[tuple[str, ...], int]
    threshold: float

    @property
    def good_words(self) -> list[tuple[str, ...]]:
        return [w for w, n in self.counts.items() if n >= self.threshold - CHECK_SLACK]


def _flag_table(edge: EdgeEmittingHmm, constants: BoundConstants) -> np.ndarray:
    """``table[x, k]``: symbol ``x`` is the chosen flag of state ``k``."""
    table = np.zeros((edge.n_symbols, edge.n_states), dtype=bool)
    for k, s in enumerate(edge.states):
        table[edge.symbol_index(constants.flags.chosen[s]), k] = True
    return table


def _counts(edge: EdgeEmittingHmm, flags: np.ndarray, words: np.ndarray) -> np.ndarray:
    n_words, t = words.shape
    back = np.ones((n_words, edge.n_states))     # P_j(suffix), empty suffix first
    counts = np.zeros(n_words, dtype=np.int64)
    for tau in range(t - 1, -1, -1):
        x = words[:, tau]
        top = back.max(axis=1, keepdims=True) * (1 - MAX_SLACK)
        counts += np.any(flags[x] & (back >= top), axis=1)
        back = np.einsum("wij,wj->wi", edge.matrices[x], back)
    return counts


def _levels(edge: EdgeEmittingHmm, ts: Iterable[int], budget: Optional[int]):
    wanted = sorted(set(int(t) for t in ts))
    if not wanted or wanted[0] < 1:
        raise ValueError("t must be a positive integer")
    for level in iter_levels(edge, wanted[-1], budget):
        if level.t in wanted:
            yield level


def _good_mask(edge, constants, level) -> tuple[np.ndarray, np.ndarray]:
    counts = _counts(edge, _flag_table(edge, constants), level.words)
    return counts, counts >= constants.eta * level.t - CHECK_SLACK


def gt_report(model: Model, constants: BoundConstants, t: int,
              budget: Optional[int] = None) -> GtReport:
    """Count flag positions with maximal suffix probability in every word of
    ``L_t`` and split the mass into good and bad words."""
    edge = as_edge(model)
    level = next(_levels(edge, [t], budget))
    counts, good = _good_mask(edge, constants, level)
    words = [edge.word_ids(w) for w in level.words]
    return GtReport(t, float(level.prob[good].sum()), float(level.prob[~good].sum()),
                    dict(zip(words, counts.tolist())), constants.eta * t)


@dataclass(frozen=True)
class CheckRow:
    t: int
    value: float
    bound: float
    passed: bool


def check_lemma_gt(model: Model, constants: BoundConstants, t_range: Iterable[int],
                   budget: Optional[int] = None) -> list[CheckRow]:
    """``P(G_t^c) <= alpha1^t`` for each ``t``."""
    edge = as_edge(model)
    rows = []
    for level in _levels(edge, t_range, budget):
        _, good = _good_mask(edge, constants, level)
        bad = float(level.prob[~good].sum())
        bound = constants.alpha1 ** level.t
        rows.append(CheckRow(level.t, bad, bound, bad <= bound + CHECK_SLACK))
    return rows


def _max_pairwise_tv(forward: np.ndarray) -> np.ndarray:
    start = forward.sum(axis=2)                             # P_k(w)
    live = start > 0
    beliefs = forward / np.where(live, start, 1.0)[..., None]
    tv = 0.5 * np.abs(beliefs[:, :, None, :] - beliefs[:, None, :, :]).sum(axis=-1)
    both = live[:, :, None] & live[:, None, :]
    return np.where(both, tv, 0.0).max(axis=(1, 2))


def check_lemma_tv(model: Model, constants: BoundConstants, t_range: Iterable[int],
                   budget: Optional[int] = None) -> list[CheckRow]:
    """Beliefs from any two generating start states of a good word are within
    ``alpha2^t`` in total variation."""
    edge = as_edge(model)
    rows = []
    for level in _levels(edge, t_range, budget):
        _, good = _good_mask(edge, constants, level)
        tv = _max_pairwise_tv(level.forward[good])
        worst = float(tv.max()) if len(tv) else 0.0
        bound = constants.alpha2 ** level.t
        rows.append(CheckRow(level.t, worst, bound, worst <= bound + CHECK_SLACK))
    return rows


# --------------------------------------------------------------------------
# distribution inequalities

def tv_distance(mu, nu) -> float:
    mu, nu = np.asarray(mu, dtype=float), np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise LengthMismatch(f"distributions of shapes {mu.shape} and {nu.shape}")
    return float(0.5 * np.abs(mu - nu).sum())


def entropy_diff_check(mu, nu) -> tuple[float, float, bool]:
    """``|H(mu) - H(nu)| <= N eps log2(1/eps)`` with ``eps`` the TV distance."""
    eps = tv_distance(mu, nu)
    if eps > 1 / math.e + CHECK_SLACK:
        raise EpsilonTooLarge(f"total variation {eps:.6g} exceeds 1/e")
    lhs = abs(entropy(mu) - entropy(nu))
    rhs = len(np.asarray(mu)) * eps * math.log2(1 / eps) if eps > 0 else 0.0
    return lhs, rhs, lhs <= rhs + CHECK_SLACK


def channel_contraction_check(model: Model, mu, nu) -> tuple[float, float, bool]:
    """Next-symbol distributions are no further apart than the state beliefs."""
    rows = as_edge(model).symbol_row_sums
    mu, nu = np.asarray(mu, dtype=float), np.asarray(nu, dtype=float)
    before = tv_distance(mu, nu)
    after = tv_distance(mu @ rows, nu @ rows)
    return after, before, after <= before + CHECK_SLACK


# --------------------------------------------------------------------------
# the convergence bound

@dataclass(frozen=True)
class TheoremRow:
    t: int
    lhs: float
    rhs: float
    status: str          # pass | fail | vacuous | outside-hypothesis
    in_hypothesis: bool


def theorem_rhs(constants: BoundConstants, n_symbols: int, t: int) -> float:
    a2t = constants.alpha2 ** t
    head = n_symbols * a2t * math.log2(1 / a2t) if a2t > 0 else 0.0
    return head + constants.alpha1 ** t * math.log2(n_symbols)


def check_theorem_bound(model: Model, constants: BoundConstants, t_range: Iterable[int],
                        budget: Optional[int] = None) -> list[TheoremRow]:
    """Compare ``h(t+1) - L(t)``, an upper bound on ``h(t+1) - h``, with the
    theorem's right-hand side.

    Rows are labeled ``vacuous`` when the rhs is at least ``log2 |X|`` (no
    information) and ``outside-hypothesis`` when ``t < t0``.
    """
    edge = as_edge(model)
    ts = sorted(set(int(t) for t in t_range))
    table = h_estimates(edge, ts[-1], budget)
    cap = math.log2(edge.n_symbols)
    rows = []
    for t in ts:
        lhs = float(table.gap[table.row(t)])
        rhs = theorem_rhs(constants, edge.n_symbols, t)
        inside = t >= constants.t0
        if rhs >= cap:
            status = "vacuous"
        elif not inside:
            status = "outside-hypothesis"
        else:
            status = "pass" if lhs <= rhs + CHECK_SLACK else "fail"
        rows.append(TheoremRow(t, lhs, rhs, status, inside))
    return rows


@dataclass(frozen=True)
class RateSummary:
    n: int
    alpha: float
    alpha_root: float
    rho: float

    @property
    def passed(self) -> bool:
        return self.rho <= self.alpha_root + RATE_TOL


def theorem_rate_summary(model: Model, n: int, t_max: int,
                         window: Optional[tuple[int, int]] = None,
                         budget: Optional[int] = None) -> RateSummary:
    """Fitted decay rate of ``gap(t)`` against ``alpha^(1/n)``, with ``alpha``
    taken from the constants of the block model ``M^n``."""
    from .blocks import block_model

    edge = as_edge(model)
    target = edge if n == 1 else block_model(edge, n).model
    try:
        flags = choose_flags(support_graph(target))
    except NotFlagState as exc:
        raise NotFlagState(f"block model at n={n} is not flag-state: {exc}") from None
    alpha = bound_constants(target, flags).alpha
    if window is None:
        window = (max(1, t_max // 2), t_max)
    rho = fit_convergence_rate(h_estimates(edge, t_max, budget), window)
    return RateSummary(n, alpha, alpha ** (1.0 / n), rho)
