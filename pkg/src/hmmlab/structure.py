"""Labeled-graph tests on HMM topologies.

All routines work on the pair product graph: node ``{i, j}`` steps on symbol
``x`` to every ``{a, b}`` with ``a in delta_i(x)`` and ``b in delta_j(x)``.
A pair is path-mergeable iff it reaches a diagonal node ``{k, k}``, and it is
incompatible iff no cycle is reachable from it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .core import Topology, _topology, mask_indices
from .errors import NotMergeable, NotPathMergeable

Pair = tuple[int, int]


def _pair(a: int, b: int) -> Pair:
    return (a, b) if a <= b else (b, a)


def _product_successors(top: Topology, node: Pair, x: int) -> set[Pair]:
    i, j = node
    di, dj = top.succ[x][i], top.succ[x][j]
    if not di or not dj:
        return set()
    bj = mask_indices(dj)
    return {_pair(a, b) for a in mask_indices(di) for b in bj}


class _ProductGraph:
    """Product graph over unordered pairs, diagonal included."""

    def __init__(self, top: Topology):
        self.top = top
        n = len(top.states)
        self.nodes = [(i, j) for i in range(n) for j in range(i, n)]
        self.succ: dict[Pair, list[set[Pair]]] = {
            u: [_product_successors(top, u, x) for x in range(len(top.alphabet))]
            for u in self.nodes
        }

    def predecessors(self) -> dict[Pair, set[Pair]]:
        pred: dict[Pair, set[Pair]] = {u: set() for u in self.nodes}
        for u, rows in self.succ.items():
            for row in rows:
                for v in row:
                    pred[v].add(u)
        return pred

    def distance_to_diagonal(self) -> dict[Pair, int]:
        """Length of the shortest merging word for every mergeable pair."""
        pred = self.predecessors()
        dist = {(k, k): 0 for k in range(len(self.top.states))}
        queue = deque(dist)
        while queue:
            v = queue.popleft()
            for u in pred[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist


@dataclass(frozen=True)
class PairTable:
    """Status of every unordered pair of distinct states.

    ``status`` maps ``(state_i, state_j)`` (declaration order) to a label;
    ``witness`` holds the certifying word for mergeable pairs, or the bounding
    length ``m`` for incompatible pairs.
    """

    states: tuple[str, ...]
    status: dict[tuple[str, str], str]
    witness: dict[tuple[str, str], object] = field(default_factory=dict)

    def marked(self, label: str) -> list[tuple[str, str]]:
        return [p for p, s in self.status.items() if s == label]

    @property
    def all_mergeable(self) -> bool:
        return all(s == "mergeable" for s in self.status.values())

    def to_json(self) -> list[dict]:
        out = []
        for (i, j), s in self.status.items():
            row = {"pair": [i, j], "status": s}
            w = self.witness.get((i, j))
            if isinstance(w, tuple):
                row["witness"] = list(w)
            elif w is not None:
                row["witness"] = w
            out.append(row)
        return out


def _pair_keys(top: Topology):
    n = len(top.states)
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def path_mergeable_pairs(topology, witnesses: bool = True) -> PairTable:
    """Table-filling test for path-mergeable pairs (worklist form).

    Pairs with a common successor on a single symbol are marked first; marks
    then propagate backwards through the product graph. The product graph has
    at most ``m * n^4`` edges, which bounds the running time.
    """
    top = _topology(topology)
    graph = _ProductGraph(top)
    dist = graph.distance_to_diagonal()
    status, wit = {}, {}
    for i, j in _pair_keys(top):
        key = (top.states[i], top.states[j])
        if (i, j) in dist:
            status[key] = "mergeable"
            if witnesses:
                wit[key] = top.word_ids(_lex_merge(graph, dist, (i, j))[0])
        else:
            status[key] = "not-mergeable"
    return PairTable(top.states, status, wit)


def is_path_mergeable(topology) -> bool:
    top = _topology(topology)
    if len(top.states) < 2:
        return True
    dist = _ProductGraph(top).distance_to_diagonal()
    return all(p in dist for p in _pair_keys(top))


def table_fill_sweeps(topology) -> list[frozenset[tuple[str, str]]]:
    """Sweep form of the table-filling algorithm.

    Returns the marked set after initialization and after every inductive
    sweep, stopping at the first sweep that adds nothing.
    """
    top = _topology(topology)
    keys = _pair_keys(top)
    m = len(top.alphabet)
    marked = {(i, j) for i, j in keys
              if any(top.succ[x][i] & top.succ[x][j] for x in range(m))}
    history = [frozenset(marked)]
    while True:
        new = set(marked)
        for i, j in keys:
            if (i, j) in marked:
                continue
            for x in range(m):
                if _product_successors(top, (i, j), x) & marked:
                    new.add((i, j))
                    break
        if new == marked:
            break
        marked = new
        history.append(frozenset(marked))
    return [frozenset((top.states[i], top.states[j]) for i, j in s) for s in history]


def brute_force_mergeable(topology, i, j, max_len: int) -> bool:
    """Direct search: does some word of length <= ``max_len`` merge ``i`` and ``j``?"""
    top = _topology(topology)
    a, b = top.state_index(i), top.state_index(j)
    if a == b:
        return True
    level = {(1 << a, 1 << b)}
    for _ in range(max_len):
        nxt = set()
        for ma, mb in level:
            for x in range(len(top.alphabet)):
                na, nb = top.step(ma, x), top.step(mb, x)
                if na & nb:
                    return True
                if na and nb:
                    nxt.add((na, nb))
        level = nxt
        if not level:
            break
    return False


def merge_word(topology, i, j) -> tuple[tuple[str, ...], str]:
    """Shortest merging word for ``(i, j)`` and a merge state.

    Ties are broken towards the lexicographically least word, then the least
    state in declaration order.
    """
    top = _topology(topology)
    a, b = top.state_index(i), top.state_index(j)
    if a == b:
        return (), top.states[a]
    graph = _ProductGraph(top)
    dist = graph.distance_to_diagonal()
    start = _pair(a, b)
    if start not in dist:
        raise NotMergeable(f"states {i!r} and {j!r} are not path-mergeable")
    word, k = _lex_merge(graph, dist, start)
    return top.word_ids(word), top.states[k]


def _lex_merge(graph: _ProductGraph, dist: dict[Pair, int], start: Pair) -> tuple[list[int], int]:
    # every frontier node sits exactly `remaining` steps from the diagonal
    frontier = {start}
    word = []
    for remaining in range(dist[start] - 1, -1, -1):
        for x in range(len(graph.top.alphabet)):
            nxt = {v for u in frontier for v in graph.succ[u][x] if dist.get(v) == remaining}
            if nxt:
                word.append(x)
                frontier = nxt
                break
    return word, min(u[0] for u in frontier if u[0] == u[1])


@dataclass(frozen=True)
class FlagAssignment:
    """Chosen flag symbol per state plus every valid flag per state."""

    chosen: dict[str, str]
    options: dict[str, tuple[str, ...]]

    @property
    def flag_state(self) -> bool:
        return all(self.options.values())

    def states_flagged_by(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for k, x in self.chosen.items():
            out.setdefault(x, []).append(k)
        return out


def flag_options(topology) -> dict[str, tuple[str, ...]]:
    """Every flag symbol of every state, in alphabet order.

    Symbols that no state can emit are never flags.
    """
    top = _topology(topology)
    full = (1 << len(top.states)) - 1
    options: dict[str, list[str]] = {s: [] for s in top.states}
    for x, sym in enumerate(top.alphabet):
        generators = [m for m in top.succ[x] if m]
        if not generators:
            continue
        common = full
        for m in generators:
            common &= m
        for k in mask_indices(common):
            options[top.states[k]].append(sym)
    return {s: tuple(v) for s, v in options.items()}


def flag_symbols(topology) -> FlagAssignment:
    """Flag sets per state; the chosen flag is the first in alphabet order."""
    options = flag_options(topology)
    chosen = {s: v[0] for s, v in options.items() if v}
    return FlagAssignment(chosen, options)


def incompatible_pairs(topology) -> PairTable:
    """Pairs whose common words have bounded length.

    A pair is incompatible iff no cycle of the product graph is reachable from
    it. The witness ``m`` is the least length at which the two states share no
    word: one more than the longest product path leaving the pair.
    """
    top = _topology(topology)
    graph = _ProductGraph(top)
    out = {u: set().union(*rows) if rows else set() for u, rows in graph.succ.items()}
    pred = graph.predecessors()
    outdeg = {u: len(v) for u, v in out.items()}
    height: dict[Pair, int] = {}
    queue = deque(u for u, d in outdeg.items() if d == 0)
    for u in queue:
        height[u] = 0
    # peel sinks; nodes never peeled can reach a cycle
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            outdeg[u] -= 1
            if outdeg[u] == 0:
                height[u] = 1 + max(height[w] for w in out[u])
                queue.append(u)
    status, wit = {}, {}
    for i, j in _pair_keys(top):
        key = (top.states[i], top.states[j])
        if (i, j) in height:
            status[key] = "incompatible"
            wit[key] = height[(i, j)] + 1
        else:
            status[key] = "compatible"
    return PairTable(top.states, status, wit)


def is_flag_word(topology, word, state) -> bool:
    """``state`` is reachable on ``word`` from every state that can emit it,
    and at least one state can emit it."""
    top = _topology(topology)
    idx = top.word_indices(word)
    k = 1 << top.state_index(state)
    generating = False
    for i in range(len(top.states)):
        reach = top.run(1 << i, idx)
        if reach:
            generating = True
            if not reach & k:
                return False
    return generating


def construct_flag_word(topology) -> tuple[tuple[str, ...], str]:
    """Build a flag word ``v*`` and its flagged state ``i*``.

    Start from the first state; repeatedly take the least state ``k`` still in
    ``R``, steer one of its current successors into a merge with the running
    state, and drop from ``R`` every state that either reaches the new running
    state on the word so far or cannot emit it at all.
    """
    top = _topology(topology)
    if not is_path_mergeable(top):
        raise NotPathMergeable("flag-word construction needs a path-mergeable topology")
    n = len(top.states)
    v: list[int] = []
    i_t = 0
    remaining = set(range(1, n))
    while remaining:
        k_t = min(remaining)
        j_t = min(mask_indices(top.run(1 << k_t, v)))
        w_t, merge_state = merge_word(top, top.states[i_t], top.states[j_t])
        v = v + list(top.word_indices(w_t))
        i_t = top.state_index(merge_state)
        remaining = {k for k in remaining
                     if top.run(1 << k, v) and not top.run(1 << k, v) >> i_t & 1}
    return top.word_ids(v), top.states[i_t]


def classify(topology) -> dict:
    """Summary used by the ``analyze`` command."""
    from .core import irreducible, period

    top = _topology(topology)
    irr = irreducible(top)
    pairs = path_mergeable_pairs(top)
    flags = flag_symbols(top)
    incompat = incompatible_pairs(top)
    mergeable = pairs.all_mergeable
    either = all(pairs.status[p] == "mergeable" or incompat.status[p] == "incompatible"
                 for p in pairs.status)
    return {
        "states": list(top.states),
        "alphabet": list(top.alphabet),
        "edges": len(top.edges),
        "irreducible": irr,
        "period": period(top) if irr else None,
        "path_mergeable": mergeable,
        "flag_state": flags.flag_state,
        "mergeable_or_incompatible": either,
        "flags": {"chosen": flags.chosen, "options": {k: list(v) for k, v in flags.options.items()}},
        "pairs": pairs.to_json(),
        "incompatible": incompat.to_json(),
    }
