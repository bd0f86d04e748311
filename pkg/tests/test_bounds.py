import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmmlab.bounds import (
    bound_constants,
    channel_contraction_check,
    check_lemma_gt,
    check_lemma_tv,
    check_theorem_bound,
    choose_flags,
    entropy_diff_check,
    gt_report,
    theorem_rate_summary,
    tv_distance,
)
from hmmlab.core import EdgeEmittingHmm, phi, stationary_distribution, support_graph
from hmmlab.errors import EpsilonTooLarge, LengthMismatch, NotFlagState, SearchTooLarge
from hmmlab.structure import flag_options

from conftest import random_flag_state_models
from oracles import EX1_FRACTIONS, exact_constants, row_forward, to_lists

# state 1 may use a or b; b gives the larger p_1 and hence the smaller alpha
CHOICE = EdgeEmittingHmm.from_dict(["1", "2"], {
    "a": [[0.25, 0.25], [0.25, 0.25]],
    "b": [[0.5, 0], [0.5, 0]],
})


def ex1_constants(ex1):
    return bound_constants(ex1, {"1": "b", "2": "a", "3": "a"})


def naive_counts(model, flags, t):
    """N(w) for every positive-probability word, suffix probabilities from scratch."""
    mats, pi = to_lists(model)
    n, m = len(pi), len(mats)
    y = {k: model.symbol_index(flags[s]) for k, s in enumerate(model.states)}
    out = {}
    for w in itertools.product(range(m), repeat=t):
        if sum(row_forward(mats, pi, w)) <= 0:
            continue
        count = 0
        for tau in range(t):
            suffix = w[tau + 1:]
            probs = [sum(row_forward(mats, [1.0 if a == j else 0.0 for a in range(n)], suffix))
                     for j in range(n)]
            best = max(probs)
            if any(y[k] == w[tau] and probs[k] >= best * (1 - 1e-12) for k in range(n)):
                count += 1
        out[model.word_ids(w)] = count
    return out


class TestConstants:
    def test_ex1_exact(self, ex1):
        c = ex1_constants(ex1)
        exact = exact_constants(EX1_FRACTIONS, {0: "b", 1: "a", 2: "a"})
        assert exact["p_star"] == exact["q_star"] == 0.5
        assert exact["r_star"] * 3 == 2 and exact["eta"] * 18 == 1
        for name in ("p_star", "q_star", "r_star", "eta"):
            assert abs(getattr(c, name) - float(exact[name])) <= 1e-12
        assert abs(c.alpha1 - math.exp(-1 / 162)) <= 1e-12
        assert abs(c.alpha1 - math.exp(-float(exact["alpha1_exponent"]))) <= 1e-12
        assert abs(c.alpha2 - 0.75 ** (1 / 18)) <= 1e-12
        assert c.alpha == c.alpha1
        assert c.t0 == 63 == math.ceil(18 / math.log(4 / 3))
        for j, s in enumerate(ex1.states):
            assert abs(c.p[s] - float(exact["p"][j])) <= 1e-12
            assert abs(c.q[s] - float(exact["q"][j])) <= 1e-12

    def test_cycle2(self, cycle2):
        c = bound_constants(cycle2, choose_flags(cycle2))
        assert (c.p_star, c.q_star, c.r_star) == (1.0, 1.0, 1.0)
        assert c.alpha2 == 0.0 and c.t0 == 1

    def test_identities_on_random_models(self):
        for m in random_flag_state_models(40, seed=300):
            c = bound_constants(m, choose_flags(m))
            pi = stationary_distribution(m)
            n = m.n_states
            assert c.p_star == min(c.p.values()) and c.q_star == min(c.q.values())
            assert c.r_star == pytest.approx(min(a / b for a in pi for b in pi), abs=1e-12)
            assert c.eta == pytest.approx(c.p_star * c.r_star / (2 * n), abs=1e-15)
            assert c.alpha1 == pytest.approx(math.exp(-(c.p_star * c.r_star) ** 2 / (2 * n * n)), abs=1e-15)
            assert c.alpha2 == pytest.approx((1 - c.q_star ** 2) ** c.eta, abs=1e-15)
            assert 0 < c.alpha < 1 and 0 < c.eta < 1
            assert all(0 < v <= 1 + 1e-12 for v in (*c.p.values(), *c.q.values()))
            if c.alpha2 > 0:
                assert c.alpha2 ** c.t0 <= 1 / math.e < c.alpha2 ** (c.t0 - 1)

    def test_not_flag_state(self, ex1, block2):
        with pytest.raises(NotFlagState):
            bound_constants(ex1, {"1": "b", "2": "c", "3": "a"})
        with pytest.raises(NotFlagState):
            bound_constants(ex1, {"1": "b", "2": "a"})
        with pytest.raises(NotFlagState):
            choose_flags(block2)


class TestChooseFlags:
    def test_ex1(self, ex1):
        lex = choose_flags(support_graph(ex1))
        assert lex.chosen == {"1": "b", "2": "a", "3": "a"}
        assert choose_flags(ex1, "optimize").chosen == lex.chosen

    def test_tie_goes_to_lex(self):
        coin = EdgeEmittingHmm.from_dict(["s"], {"a": [[0.5]], "b": [[0.5]]})
        assert choose_flags(coin, "optimize").chosen == {"s": "a"}

    def test_optimize_is_exhaustive_minimum(self):
        assert choose_flags(CHOICE).chosen == {"1": "a", "2": "a"}
        best = choose_flags(CHOICE, "optimize")
        assert best.chosen == {"1": "b", "2": "a"}
        options = flag_options(support_graph(CHOICE))
        alphas = {combo: bound_constants(CHOICE, dict(zip(options, combo))).alpha
                  for combo in itertools.product(*options.values())}
        assert bound_constants(CHOICE, best).alpha == min(alphas.values())
        assert bound_constants(CHOICE, best).alpha < bound_constants(CHOICE, choose_flags(CHOICE)).alpha

    def test_optimize_cap(self, monkeypatch):
        import hmmlab.bounds as b
        monkeypatch.setattr(b, "OPTIMIZE_CAP", 1)
        with pytest.raises(SearchTooLarge):
            choose_flags(CHOICE, "optimize")

    def test_optimize_needs_probabilities(self):
        with pytest.raises(ValueError):
            choose_flags(support_graph(CHOICE), "optimize")


class TestGt:
    def test_length_one(self, ex1):
        c = ex1_constants(ex1)
        flags = set(c.flags.chosen.values())
        report = gt_report(ex1, c, 1)
        for (x,), n in report.counts.items():
            assert n == (1 if x in flags else 0)

    def test_cycle2(self, cycle2):
        c = bound_constants(cycle2, choose_flags(cycle2))
        for t in (1, 4, 7):
            report = gt_report(cycle2, c, t)
            assert set(report.counts.values()) == {t}
            assert report.mass_bad == 0.0

    def test_ex1_mass(self, ex1):
        c = ex1_constants(ex1)
        report = gt_report(ex1, c, 6)
        assert report.mass_bad <= c.alpha1 ** 6
        assert abs(report.mass_good + report.mass_bad - 1) <= 1e-9

    def test_counts_match_naive(self, ex1):
        c = ex1_constants(ex1)
        for t in range(1, 6):
            assert gt_report(ex1, c, t).counts == naive_counts(ex1, c.flags.chosen, t)
        for m in random_flag_state_models(10, m=3, seed=900):
            c = bound_constants(m, choose_flags(m))
            for t in (2, 4):
                assert gt_report(m, c, t).counts == naive_counts(m, c.flags.chosen, t)

    def test_permutation_invariance(self, ex1):
        c = ex1_constants(ex1)
        order = [2, 0, 1]
        perm = EdgeEmittingHmm(tuple(ex1.states[k] for k in order), ex1.alphabet,
                               ex1.matrices[:, order][:, :, order])
        cp = bound_constants(perm, c.flags.chosen)
        for t in range(1, 8):
            a, b = gt_report(ex1, c, t), gt_report(perm, cp, t)
            assert set(a.good_words) == set(b.good_words)
            assert abs(a.mass_bad - b.mass_bad) <= 1e-12

    def test_lemmas_on_ex1(self, ex1):
        c = ex1_constants(ex1)
        assert all(r.passed for r in check_lemma_gt(ex1, c, range(1, 11)))
        assert all(r.passed for r in check_lemma_tv(ex1, c, range(1, 11)))

    def test_lemmas_on_cycle2(self, cycle2):
        c = bound_constants(cycle2, choose_flags(cycle2))
        assert all(r.value == 0.0 for r in check_lemma_gt(cycle2, c, range(1, 6)))
        assert all(r.value == 0.0 for r in check_lemma_tv(cycle2, c, range(1, 6)))

    def test_tv_matches_naive(self, ex1):
        c = ex1_constants(ex1)
        rows = check_lemma_tv(ex1, c, range(1, 6))
        for row in rows:
            good = gt_report(ex1, c, row.t).good_words
            worst = 0.0
            for w in good:
                live = [s for s in ex1.states if phi(ex1, s, w).any()]
                for k, kk in itertools.combinations(live, 2):
                    worst = max(worst, 0.5 * np.abs(phi(ex1, k, w) - phi(ex1, kk, w)).sum())
            assert abs(row.value - worst) <= 1e-12

    def test_lemmas_on_random_models(self):
        for m in random_flag_state_models(10, seed=42):
            c = bound_constants(m, choose_flags(m))
            assert all(r.passed for r in check_lemma_gt(m, c, range(1, 7)))
            assert all(r.passed for r in check_lemma_tv(m, c, range(1, 7)))


distributions = st.integers(1, 6).flatmap(
    lambda n: st.tuples(*[st.lists(st.floats(0, 1), min_size=n, max_size=n)] * 3))


def _norm(v):
    v = np.asarray(v, dtype=float) + 1e-9
    return v / v.sum()


class TestDistributions:
    def test_examples(self):
        assert tv_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
        assert tv_distance([1, 0], [0, 1]) == 1.0
        assert tv_distance([0.5, 0.5], [0.25, 0.75]) == 0.25
        with pytest.raises(LengthMismatch):
            tv_distance([1], [0.5, 0.5])

    @settings(max_examples=200)
    @given(distributions)
    def test_metric(self, triple):
        a, b, c = (_norm(v) for v in triple)
        assert 0 <= tv_distance(a, b) <= 1 + 1e-12
        assert tv_distance(a, b) == tv_distance(b, a)
        assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12

    def test_entropy_diff_examples(self):
        assert entropy_diff_check([0.3, 0.7], [0.3, 0.7]) == (0.0, 0.0, True)
        lhs, rhs, ok = entropy_diff_check([1, 0], [1 - 1 / math.e, 1 / math.e])
        assert ok and rhs == pytest.approx(2 / math.e * math.log2(math.e), abs=1e-12)
        with pytest.raises(EpsilonTooLarge):
            entropy_diff_check([1, 0], [0.5, 0.5])

    def test_entropy_diff_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 8))
            mu = rng.dirichlet(np.ones(n))
            nu = rng.dirichlet(np.ones(n))
            eps = tv_distance(mu, nu)
            # pull nu towards mu until the TV is at most 1/e
            if eps > 1 / math.e:
                nu = mu + (nu - mu) * (rng.random() / math.e / eps)
            assert entropy_diff_check(mu, nu)[2]

    def test_channel_examples(self, ex1):
        assert channel_contraction_check(ex1, [1, 0, 0], [1, 0, 0]) == (0.0, 0.0, True)
        after, before, ok = channel_contraction_check(ex1, [0, 1, 0], [0, 0, 1])
        assert ok and before == 1.0 and after == pytest.approx(1 / 3)

    def test_channel_random(self):
        from conftest import random_irreducible_models
        rng = np.random.default_rng(8)
        models = random_irreducible_models(50, 4, 3, seed=600)
        for k in range(500):
            m = models[k % 50]
            mu, nu = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
            assert channel_contraction_check(m, mu, nu)[2]


class TestTheorem:
    def test_cycle2(self, cycle2):
        c = bound_constants(cycle2, choose_flags(cycle2))
        rows = check_theorem_bound(cycle2, c, range(1, 8))
        assert all(r.lhs == 0.0 and r.status == "pass" for r in rows)

    def test_ex1_vacuous(self, ex1):
        c = ex1_constants(ex1)
        rows = check_theorem_bound(ex1, c, range(1, 12))
        assert c.t0 == 63
        assert all(r.status == "vacuous" and r.rhs > math.log2(3) and not r.in_hypothesis for r in rows)

    def test_high_q(self, high_q):
        c = bound_constants(high_q, choose_flags(high_q))
        assert c.t0 <= 5
        rows = check_theorem_bound(high_q, c, range(c.t0, 11))
        assert all(r.status == "pass" and r.rhs < math.log2(3) for r in rows)
        assert all(r.lhs > 0 for r in rows)

    def test_never_fails(self):
        for m in random_flag_state_models(20, m=3, seed=1200):
            c = bound_constants(m, choose_flags(m))
            assert all(r.status != "fail" for r in check_theorem_bound(m, c, range(1, 8)))


class TestRateSummary:
    def test_ex1(self, ex1):
        s = theorem_rate_summary(ex1, 1, 11, (5, 10))
        assert s.alpha == pytest.approx(math.exp(-1 / 162), abs=1e-12)
        assert s.rho <= s.alpha and s.passed

    def test_cycle2(self, cycle2):
        s = theorem_rate_summary(cycle2, 1, 8)
        assert s.rho == 0.0 and s.passed

    def test_block_fixture(self, block2):
        with pytest.raises(NotFlagState):
            theorem_rate_summary(block2, 1, 10)
        s = theorem_rate_summary(block2, 2, 12, (6, 12))
        assert s.alpha_root == pytest.approx(math.sqrt(s.alpha), abs=1e-15)
        assert s.passed
