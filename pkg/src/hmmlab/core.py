"""Core HMM types and forward computations.

Two model flavours are supported:

* :class:`EdgeEmittingHmm` -- symbol-labeled transition matrices ``T^(x)``
  whose sum is stochastic. Entry ``T^(x)[i, j]`` is the probability of moving
  from ``i`` to ``j`` while emitting ``x``.
* :class:`StateEmittingHmm` -- a stochastic transition matrix ``T`` and an
  observation matrix ``O`` with ``O[i, x] = P(X_t = x | S_t = i)``.

Every probability computation works on the edge-emitting form; state-emitting
models are converted on the fly with ``T'^(x)[i, j] = T[i, j] * O[j, x]``.

Reachability questions (``delta``, irreducibility, period) never look at
floating point values. They run on a :class:`Topology`, the boolean labeled
graph built from the entries that are exactly zero in the input.

Distributions are plain 1-D numpy arrays. The all-zero vector is the *null
distribution*, returned when conditioning on a zero-probability word.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    BadReference,
    MalformedDocument,
    NegativeEntry,
    NonStochasticRow,
    NotIrreducible,
    NullBelief,
    UnknownState,
    UnknownSymbol,
    UnusedSymbol,
)

STOCHASTIC_TOL = 1e-9
DISTRIBUTION_TOL = 1e-12

StateRef = Union[str, int]
Word = Union[str, Sequence[str]]


def _ids(values: Iterable[Any], what: str) -> tuple[str, ...]:
    out = tuple(str(v) for v in values)
    if len(set(out)) != len(out):
        raise BadReference(f"duplicate {what} identifiers: {list(out)}")
    if not out:
        raise MalformedDocument(f"at least one {what} is required")
    return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _check_rows(states, matrix: np.ndarray, what: str) -> None:
    if np.any(matrix < 0):
        raise NegativeEntry(f"{what} has a negative entry")
    for state, total in zip(states, matrix.sum(axis=1)):
        if abs(total - 1.0) > STOCHASTIC_TOL:
            raise NonStochasticRow(state, float(total))


class _Indexed:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]

    @cached_property
    def _state_pos(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def _symbol_pos(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.alphabet)}

    def state_index(self, state: StateRef) -> int:
        try:
            return self._state_pos[str(state)]
        except KeyError:
            raise UnknownState(state) from None

    def symbol_index(self, symbol: str) -> int:
        try:
            return self._symbol_pos[str(symbol)]
        except KeyError:
            raise UnknownSymbol(symbol) from None

    def word_indices(self, word: Word) -> tuple[int, ...]:
        """Map a word to symbol indices.

        A ``str`` is split into characters when every symbol is a single
        character; otherwise words must be given as a sequence of symbols.
        """
        if isinstance(word, str):
            if all(len(x) == 1 for x in self.alphabet):
                word = list(word)
            elif word == "":
                word = []
            else:
                raise UnknownSymbol(
                    f"{word} (pass multi-character symbols as a list)")
        return tuple(self.symbol_index(x) for x in word)

    def word_ids(self, indices: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.alphabet[i] for i in indices)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_symbols(self) -> int:
        return len(self.alphabet)


@dataclass(frozen=True, eq=False)
class EdgeEmittingHmm(_Indexed):
    """Edge-emitting HMM; ``matrices[x]`` is ``T^(x)`` for ``alphabet[x]``."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    matrices: np.ndarray

    def __post_init__(self):
        states = _ids(self.states, "state")
        alphabet = _ids(self.alphabet, "symbol")
        mats = np.asarray(self.matrices, dtype=float)
        n, m = len(states), len(alphabet)
        if mats.shape != (m, n, n):
            raise MalformedDocument(
                f"expected {m} matrices of shape {n}x{n}, got array of shape {mats.shape}")
        if np.any(mats < 0):
            raise NegativeEntry("transition matrices contain a negative entry")
        _check_rows(states, mats.sum(axis=0), "transition matrix")
        for x, sym in enumerate(alphabet):
            if not np.any(mats[x] > 0):
                raise UnusedSymbol(sym)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "matrices", _frozen(mats))

    @classmethod
    def from_dict(cls, states, matrices: Mapping[str, Any]) -> "EdgeEmittingHmm":
        alphabet = [str(x) for x in matrices]
        return cls(tuple(states), tuple(alphabet),
                   np.array([_parse_matrix(matrices[x], f"matrices[{x!r}]") for x in matrices]))

    @property
    def kind(self) -> str:
        return "edge"

    @cached_property
    def transition(self) -> np.ndarray:
        return _frozen(self.matrices.sum(axis=0))

    @cached_property
    def symbol_row_sums(self) -> np.ndarray:
        """``R[i, x] = P_i(X_0 = x)``, shape (|S|, |X|)."""
        return _frozen(self.matrices.sum(axis=2).T)

    def matrix(self, symbol: str) -> np.ndarray:
        return self.matrices[self.symbol_index(symbol)]

    def to_document(self) -> dict:
        return {
            "kind": "edge",
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "matrices": {x: self.matrices[k].tolist() for k, x in enumerate(self.alphabet)},
        }


@dataclass(frozen=True, eq=False)
class StateEmittingHmm(_Indexed):
    """State-emitting HMM with transition ``T`` and observation ``O``."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transition: np.ndarray
    observation: np.ndarray

    def __post_init__(self):
        states = _ids(self.states, "state")
        alphabet = _ids(self.alphabet, "symbol")
        t = np.asarray(self.transition, dtype=float)
        o = np.asarray(self.observation, dtype=float)
        n, m = len(states), len(alphabet)
        if t.shape != (n, n):
            raise MalformedDocument(f"transition must be {n}x{n}, got {t.shape}")
        if o.shape != (n, m):
            raise MalformedDocument(f"observation must be {n}x{m}, got {o.shape}")
        _check_rows(states, t, "transition matrix")
        _check_rows(states, o, "observation matrix")
        for x, sym in enumerate(alphabet):
            if not np.any(o[:, x] > 0):
                raise UnusedSymbol(sym)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "transition", _frozen(t))
        object.__setattr__(self, "observation", _frozen(o))

    @property
    def kind(self) -> str:
        return "state"

    @cached_property
    def edge_form(self) -> EdgeEmittingHmm:
        from .convert import state_to_edge
        return state_to_edge(self)

    def to_document(self) -> dict:
        return {
            "kind": "state",
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "transition": self.transition.tolist(),
            "observation": self.observation.tolist(),
        }


Model = Union[EdgeEmittingHmm, StateEmittingHmm]


def as_edge(model: Model) -> EdgeEmittingHmm:
    return model if isinstance(model, EdgeEmittingHmm) else model.edge_form


@dataclass(frozen=True, eq=False)
class Topology(_Indexed):
    """Support of an HMM: labeled edges ``(from_state, to_state, symbol)``."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        states = _ids(self.states, "state")
        alphabet = _ids(self.alphabet, "symbol")
        edges = frozenset((str(i), str(j), str(x)) for i, j, x in self.edges)
        sset, aset = set(states), set(alphabet)
        for i, j, x in edges:
            if i not in sset or j not in sset or x not in aset:
                raise BadReference(f"edge {(i, j, x)} references an undeclared state or symbol")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "edges", edges)

    def _key(self):
        return self.states, self.alphabet, self.edges

    def __eq__(self, other):
        return isinstance(other, Topology) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @cached_property
    def succ(self) -> tuple[tuple[int, ...], ...]:
        """``succ[x][i]`` is the bitmask of ``delta_i(x)``."""
        table = [[0] * len(self.states) for _ in self.alphabet]
        for i, j, x in self.edges:
            table[self.symbol_index(x)][self.state_index(i)] |= 1 << self.state_index(j)
        return tuple(tuple(row) for row in table)

    @cached_property
    def out_mask(self) -> tuple[int, ...]:
        """Symbol-erased successor bitmask per state."""
        return tuple(reduce(int.__or__, (row[i] for row in self.succ), 0)
                     for i in range(len(self.states)))

    def step(self, mask: int, x: int) -> int:
        row = self.succ[x]
        out = 0
        while mask:
            low = mask & -mask
            out |= row[low.bit_length() - 1]
            mask ^= low
        return out

    def run(self, mask: int, word: Sequence[int]) -> int:
        for x in word:
            if not mask:
                break
            mask = self.step(mask, x)
        return mask

    def mask_to_ids(self, mask: int) -> frozenset[str]:
        return frozenset(s for k, s in enumerate(self.states) if mask >> k & 1)


def mask_indices(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


# --------------------------------------------------------------------------
# document parsing

def parse_probability(value: Any, where: str = "entry") -> float:
    """Parse a number or an exact ``"p/q"`` string."""
    if isinstance(value, bool):
        raise MalformedDocument(f"{where}: boolean is not a probability")
    if isinstance(value, (int, float)):
        v = float(value)
    elif isinstance(value, str):
        try:
            v = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise MalformedDocument(f"{where}: cannot parse {value!r} as a probability") from None
    else:
        raise MalformedDocument(f"{where}: expected a number or 'p/q' string, got {value!r}")
    if math.isnan(v) or math.isinf(v):
        raise MalformedDocument(f"{where}: {value!r} is not finite")
    if v < 0:
        raise NegativeEntry(f"{where}: negative probability {value!r}")
    return v


def _parse_matrix(rows: Any, where: str) -> list[list[float]]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise MalformedDocument(f"{where}: expected a list of rows")
    return [[parse_probability(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)]
            for i, r in enumerate(rows)]


def validate(doc: Mapping[str, Any]) -> Model:
    """Turn a parsed model document into a validated model.

    Raises a :class:`~hmmlab.errors.ValidationError` subclass on rejection.
    """
    if not isinstance(doc, Mapping):
        raise MalformedDocument("model document must be a JSON object")
    kind = doc.get("kind", "edge")
    for key in ("states", "alphabet"):
        if not isinstance(doc.get(key), list):
            raise MalformedDocument(f"missing list field {key!r}")
    states = _ids(doc["states"], "state")
    alphabet = _ids(doc["alphabet"], "symbol")
    if kind == "edge":
        mats = doc.get("matrices")
        if not isinstance(mats, Mapping):
            raise MalformedDocument("edge model requires a 'matrices' object")
        extra = set(map(str, mats)) - set(alphabet)
        if extra:
            raise BadReference(f"matrices given for undeclared symbols {sorted(extra)}")
        mats = {str(k): v for k, v in mats.items()}
        missing = [x for x in alphabet if x not in mats]
        if missing:
            raise BadReference(f"no matrix for symbols {missing}")
        arr = []
        for x in alphabet:
            m = _parse_matrix(mats[x], f"matrices[{x!r}]")
            if len(m) != len(states) or any(len(r) != len(states) for r in m):
                raise BadReference(f"matrix for {x!r} must be {len(states)}x{len(states)}")
            arr.append(m)
        return EdgeEmittingHmm(states, alphabet, np.array(arr, dtype=float))
    if kind == "state":
        if "transition" not in doc or "observation" not in doc:
            raise MalformedDocument("state model requires 'transition' and 'observation'")
        t = _parse_matrix(doc["transition"], "transition")
        o = _parse_matrix(doc["observation"], "observation")
        if len(t) != len(states) or any(len(r) != len(states) for r in t):
            raise BadReference(f"transition must be {len(states)}x{len(states)}")
        if len(o) != len(states) or any(len(r) != len(alphabet) for r in o):
            raise BadReference(f"observation must be {len(states)}x{len(alphabet)}")
        return StateEmittingHmm(states, alphabet, np.array(t), np.array(o))
    raise MalformedDocument(f"unknown model kind {kind!r}")


# --------------------------------------------------------------------------
# structure of the state graph

def support_graph(model: Model) -> Topology:
    """Labeled support graph built from exact zeros only."""
    if isinstance(model, EdgeEmittingHmm):
        xs, ii, jj = np.nonzero(model.matrices > 0)
        edges = {(model.states[i], model.states[j], model.alphabet[x])
                 for x, i, j in zip(xs, ii, jj)}
    else:
        t, o = model.transition > 0, model.observation > 0
        edges = {(model.states[i], model.states[j], model.alphabet[x])
                 for i, j in zip(*np.nonzero(t)) for x in np.nonzero(o[j])[0]}
    return Topology(model.states, model.alphabet, frozenset(edges))


def _topology(obj) -> Topology:
    return obj if isinstance(obj, Topology) else support_graph(obj)


def _reach(adj: Sequence[int], start: int) -> int:
    seen = 1 << start
    frontier = seen
    while frontier:
        nxt = 0
        for k in mask_indices(frontier):
            nxt |= adj[k]
        frontier = nxt & ~seen
        seen |= nxt
    return seen


def irreducible(topology: Topology) -> bool:
    """True iff the symbol-erased state graph is strongly connected.

    A state without outgoing edges never counts, so a lone state needs a
    self-loop.
    """
    topology = _topology(topology)
    n = len(topology.states)
    full = (1 << n) - 1
    fwd = topology.out_mask
    if not all(fwd):
        return False
    if _reach(fwd, 0) != full:
        return False
    rev = [0] * n
    for i, m in enumerate(fwd):
        for j in mask_indices(m):
            rev[j] |= 1 << i
    return _reach(rev, 0) == full


def period(topology: Topology) -> int:
    """Gcd of directed cycle lengths, from BFS level differences."""
    topology = _topology(topology)
    if not irreducible(topology):
        raise NotIrreducible("period is only defined for irreducible graphs")
    level = {0: 0}
    queue = deque([0])
    g = 0
    adj = topology.out_mask
    while queue:
        u = queue.popleft()
        for v in mask_indices(adj[u]):
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g)


def stationary_distribution(model: Model) -> np.ndarray:
    """Solve ``pi T = pi`` with ``sum(pi) = 1`` by a direct least-squares solve."""
    if not irreducible(support_graph(model)):
        raise NotIrreducible("stationary distribution requires an irreducible model")
    t = model.transition
    n = t.shape[0]
    a = np.vstack([t.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


# --------------------------------------------------------------------------
# forward computations

def _init_vector(model: Model, init) -> np.ndarray:
    if init is None:
        return stationary_distribution(model)
    if isinstance(init, (str, int, np.integer)):
        v = np.zeros(model.n_states)
        v[model.state_index(init)] = 1.0
        return v
    v = np.asarray(init, dtype=float)
    if v.shape != (model.n_states,):
        raise ValueError(f"initial distribution must have length {model.n_states}")
    return v


def forward(model: Model, init, word: Word) -> np.ndarray:
    """Unnormalized forward row ``init . T^(x1) ... T^(xn)``."""
    edge = as_edge(model)
    v = _init_vector(model, init)
    for x in model.word_indices(word):
        v = v @ edge.matrices[x]
    return v


def word_probability(model: Model, init, word: Word) -> float:
    """``P_init(w)``; ``init`` is a state id, a distribution, or None for pi."""
    idx = model.word_indices(word)
    if not idx:
        return 1.0
    return float(forward(model, init, word).sum())


def delta(model_or_topology, state: StateRef, word: Word) -> frozenset[str]:
    """States reachable from ``state`` while emitting ``word`` (support only)."""
    top = _topology(model_or_topology)
    mask = top.run(1 << top.state_index(state), top.word_indices(word))
    return top.mask_to_ids(mask)


def normalize(v: np.ndarray) -> np.ndarray:
    total = v.sum()
    if total <= 0:
        return np.zeros_like(v, dtype=float)
    return v / total


def phi(model: Model, init, word: Word) -> np.ndarray:
    """Belief over the current state after observing ``word``.

    Returns the null (all-zero) distribution when ``word`` has probability 0.
    """
    return normalize(forward(model, init, word))


def is_null(dist: np.ndarray) -> bool:
    return not np.any(dist)


def next_symbol_distribution(model: Model, belief: np.ndarray) -> np.ndarray:
    """Distribution of the next symbol when the current state is ``belief``."""
    belief = np.asarray(belief, dtype=float)
    if is_null(belief):
        raise NullBelief("next-symbol distribution of the null belief is undefined")
    return belief @ as_edge(model).symbol_row_sums
