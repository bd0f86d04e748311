"""Slow, independent reference computations used as test oracles.

Nothing here imports the numerical routines under test: probabilities are
computed with plain Python loops or exact fractions.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction as F

EX1_FRACTIONS = {
    "a": [[F(0), F(1, 3), F(1, 3)], [F(0)] * 3, [F(0)] * 3],
    "b": [[F(1, 3), F(0), F(0)], [F(1, 3), F(0), F(1, 3)], [F(1, 6), F(1, 6), F(0)]],
    "c": [[F(0)] * 3, [F(1, 6), F(0), F(1, 6)], [F(1, 3), F(1, 3), F(0)]],
}


def exact_stationary(mats: dict) -> list[F]:
    """Gauss-Jordan on ``pi (T - I) = 0`` with one equation replaced by ``sum pi = 1``."""
    n = len(next(iter(mats.values())))
    t = [[sum(m[i][j] for m in mats.values()) for j in range(n)] for i in range(n)]
    rows = [[t[j][i] - (1 if i == j else 0) for j in range(n)] + [F(0)] for i in range(n)]
    rows[-1] = [F(1)] * n + [F(1)]
    for c in range(n):
        p = next(r for r in range(c, n) if rows[r][c] != 0)
        rows[c], rows[p] = rows[p], rows[c]
        piv = rows[c][c]
        rows[c] = [v / piv for v in rows[c]]
        for r in range(n):
            if r != c and rows[r][c] != 0:
                f = rows[r][c]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[c])]
    return [rows[i][n] for i in range(n)]


def exact_constants(mats: dict, flags: dict[int, str]) -> dict:
    """Exact p_j, q_j, p*, q*, r*, eta and the squared exponent of alpha1."""
    pi = exact_stationary(mats)
    n = len(pi)
    p, q = {}, {}
    for j in range(n):
        m = mats[flags[j]]
        p[j] = sum(pi[i] * m[i][j] for i in range(n)) / pi[j]
        ratios = [m[i][j] / sum(m[i]) for i in range(n) if sum(m[i]) > 0]
        q[j] = min(ratios)
    p_star, q_star = min(p.values()), min(q.values())
    r_star = min(a / b for a in pi for b in pi)
    eta = p_star * r_star / (2 * n)
    return {
        "pi": pi, "p": p, "q": q, "p_star": p_star, "q_star": q_star, "r_star": r_star,
        "eta": eta, "alpha1_exponent": (p_star * r_star) ** 2 / (2 * n * n),
        "alpha2_base": 1 - q_star ** 2,
    }


def to_lists(model) -> tuple[list, list]:
    """Matrices as nested Python lists plus a pure-Python stationary vector."""
    mats = [[[float(v) for v in row] for row in model.matrices[x]] for x in range(len(model.alphabet))]
    n = len(model.states)
    t = [[sum(m[i][j] for m in mats) for j in range(n)] for i in range(n)]
    pi = [1.0 / n] * n
    # lazy power iteration: averaging with the identity kills periodicity
    for _ in range(20000):
        nxt = [0.5 * pi[j] + 0.5 * sum(pi[i] * t[i][j] for i in range(n)) for j in range(n)]
        if max(abs(a - b) for a, b in zip(nxt, pi)) < 1e-16:
            pi = nxt
            break
        pi = nxt
    return mats, pi


def row_forward(mats, start: list[float], word) -> list[float]:
    v = list(start)
    n = len(v)
    for x in word:
        m = mats[x]
        v = [sum(v[i] * m[i][j] for i in range(n)) for j in range(n)]
    return v


def naive_word_probs(model, t: int) -> dict[tuple[int, ...], float]:
    """``P(w)`` for every word in ``X^t`` by a full scan."""
    mats, pi = to_lists(model)
    return {w: sum(row_forward(mats, pi, w)) for w in itertools.product(range(len(mats)), repeat=t)}


def _h(ps) -> float:
    return -sum(p * math.log2(p) for p in ps if p > 0)


def naive_block_entropy(model, t: int) -> float:
    return _h(naive_word_probs(model, t).values())


def naive_h(model, t: int) -> float:
    """``h(t) = H(X_1^t) - H(X_1^{t-1})``."""
    return naive_block_entropy(model, t) - (naive_block_entropy(model, t - 1) if t > 1 else 0.0)


def naive_lower(model, t: int) -> float:
    """``H(X_{t+1} | X_1^t, S_0)`` from per-start-state beliefs."""
    mats, pi = to_lists(model)
    n, m = len(pi), len(mats)
    total = 0.0
    for i in range(n):
        point = [1.0 if k == i else 0.0 for k in range(n)]
        for w in itertools.product(range(m), repeat=t):
            v = row_forward(mats, point, w)
            pw = sum(v)
            if pw == 0:
                continue
            nxt = [sum(v[a] * sum(mats[x][a]) for a in range(n)) / pw for x in range(m)]
            total += pi[i] * pw * _h(nxt)
    return total


def brute_flag_state(model) -> bool:
    """Every state has a symbol leading into it from every state that can emit it."""
    mats = model.matrices
    n = len(model.states)
    for k in range(n):
        ok = False
        for x in range(len(model.alphabet)):
            gens = [i for i in range(n) if mats[x][i].sum() > 0]
            if gens and all(mats[x][i][k] > 0 for i in gens):
                ok = True
        if not ok:
            return False
    return True
