"""Exact sequence-calculus identities; integer inputs give integer outputs."""

import math

import numpy as np
import pytest

from ntkspectra.seqcalc import (Seq, TailModel, binom_a, cesaro_mean, cesaro_weighted_sum,
                                check_edr_condition, extrapolation_leading, forward_difference,
                                left_extrapolate, tail_sum)


def rising(beta, p):
    out = 1.0
    for j in range(p):
        out *= beta + j
    return out


class TestForwardDifference:
    def test_constant_sequence(self):
        assert forward_difference([1, 1, 1, 1], 2).values == (0, 0)

    def test_indicator(self):
        assert forward_difference([1, 0, 0, 0], 1).values == (1, 0, 0)

    def test_power_law_difference_bound(self):
        # 0 < D^p a_k <= (beta)_p (k+1)^{-(beta+p)} for a_k = (k+1)^-beta
        beta = 3.5
        a = [(k + 1.0) ** -beta for k in range(40)]
        for p in (1, 2, 3):
            d = forward_difference(a, p).values
            for k, v in enumerate(d):
                assert 0 < v <= rising(beta, p) * (k + 1.0) ** -(beta + p) * (1 + 1e-12)

    def test_insufficient_length(self):
        with pytest.raises(ValueError, match="insufficient sequence length"):
            forward_difference([1, 2], 2)

    def test_linearity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = [int(v) for v in rng.integers(-9, 9, size=12)]
            b = [int(v) for v in rng.integers(-9, 9, size=12)]
            c1, c2 = int(rng.integers(-5, 5)), int(rng.integers(-5, 5))
            combo = [c1 * x + c2 * y for x, y in zip(a, b)]
            for p in (1, 2, 3):
                lhs = forward_difference(combo, p).values
                rhs = tuple(c1 * x + c2 * y for x, y in
                            zip(forward_difference(a, p).values, forward_difference(b, p).values))
                assert lhs == rhs


class TestTailSum:
    def test_zero_sequence(self):
        assert tail_sum(Seq([0, 0, 0, 0], support=4), 1).values == (0, 0, 0, 0)

    def test_indicator_tail(self):
        e3 = Seq([0, 0, 0, 1, 0, 0], support=4)
        assert tail_sum(e3, 1).values == (1, 1, 1, 1, 0, 0)

    def test_requires_support(self):
        with pytest.raises(ValueError, match="finite support"):
            tail_sum([1, 2, 3], 1)

    def test_round_trip_identities(self):
        # S(Da) = a and D(Sa) = a for finitely supported integer sequences
        rng = np.random.default_rng(1)
        for _ in range(25):
            supp = int(rng.integers(1, 7))
            body = [int(v) for v in rng.integers(-9, 9, size=supp)]
            a = body + [0, 0, 0]
            sa = tail_sum(Seq(a, support=supp), 1)
            assert forward_difference(sa, 1).values == tuple(a[:-1])
            da = forward_difference(a, 1)
            assert tail_sum(da, 1, support=supp).values == tuple(a[:-1])

    def test_binomial_tail_formula(self):
        # S^p a_n = sum_k A_k^{p-1} a_{n+k}
        rng = np.random.default_rng(2)
        a = [int(v) for v in rng.integers(-5, 6, size=6)] + [0] * 4
        seq = Seq(a, support=6)
        for p in (1, 2, 3):
            sp = tail_sum(seq, p)
            for n in range(len(a)):
                direct = sum(binom_a(k, p - 1) * a[n + k] for k in range(len(a) - n))
                assert sp[n] == direct


class TestCesaro:
    def test_hockey_stick_normalization(self):
        for n in range(9):
            for p in range(9):
                assert sum(binom_a(n - k, p) for k in range(n + 1)) == binom_a(n, p + 1)

    def test_ones_match_hockey_stick(self):
        # weighted sum of ones telescopes to A_n^{p+1}; the mean follows verbatim
        ones = [1] * 9
        for n in range(9):
            for p in range(9):
                assert cesaro_weighted_sum(ones, p, n) == binom_a(n, p + 1)
                assert cesaro_mean(ones, p, n) == binom_a(n, p + 1) / binom_a(n, p)

    def test_order_zero_is_partial_sum(self):
        a = [3, -1, 4, 1, -5]
        for n in range(5):
            assert cesaro_mean(a, 0, n) == sum(a[:n + 1])

    def test_summation_by_parts(self):
        # sum a_k b_k = sum D^{p+1} b_k * (A_k^p s_k^p), exact on integers
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = int(rng.integers(0, 4))
            supp_b = int(rng.integers(1, 6))
            b = [int(v) for v in rng.integers(-6, 7, size=supp_b)] + [0] * (p + 2)
            a = [int(v) for v in rng.integers(-6, 7, size=len(b))]
            lhs = sum(x * y for x, y in zip(a, b))
            db = forward_difference(b, p + 1).values
            rhs = sum(db[k] * cesaro_weighted_sum(a, p, k) for k in range(len(db)))
            assert lhs == rhs


class TestLeftExtrapolation:
    def test_empty_region_is_identity(self):
        mu = [32, 16, 8, 4, 2, 1]
        res = left_extrapolate(mu, 2, 0)
        assert res.tilde_mu.values == tuple(mu)
        assert all(v == 0 for v in res.residual.values)
        assert res.leading == mu[0]

    def test_power_law_leading_closed_form(self):
        beta, p, N = 4, 3, 5
        mu = [(k + 1.0) ** -beta for k in range(20)]
        res = left_extrapolate(mu, p, N)
        assert res.leading == pytest.approx(extrapolation_leading(mu, p, N), rel=1e-14)
        # construction-independent brute force of the closed form
        d1 = [mu[k] - mu[k + 1] for k in range(19)]
        d2 = [d1[k] - d1[k + 1] for k in range(18)]
        direct = (math.comb(N - 1, 0) * mu[N] + math.comb(N, 1) * d1[N]
                  + math.comb(N + 1, 2) * d2[N])
        assert res.leading == pytest.approx(direct, rel=1e-14)

    def test_invariants_exact_on_integers(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            p = int(rng.integers(1, 4))
            L = int(rng.integers(p + 3, 14))
            # integer sequence with nonnegative p-th differences: integrate up
            # a nonnegative difference row p times (right-anchored)
            row = [int(v) for v in rng.integers(0, 4, size=L)]
            for _ in range(p):
                nxt = [0] * (len(row) + 1)
                nxt[-1] = int(rng.integers(0, 3))
                for k in range(len(row) - 1, -1, -1):
                    nxt[k] = nxt[k + 1] + row[k]
                row = nxt
            mu = row
            N = int(rng.integers(0, len(mu) - p - 1))
            res = left_extrapolate(mu, p, N)
            tilde, resid = res.tilde_mu.values, res.residual.values
            assert all(tilde[k] == mu[k] for k in range(N, len(mu)))
            assert all(tilde[k] <= mu[k] for k in range(N))
            assert all(v >= 0 for v in forward_difference(tilde, p).values)
            assert all(v >= 0 for v in forward_difference(resid, p).values)
            assert all(resid[k] == 0 for k in range(N, len(mu)))
            assert res.leading == extrapolation_leading(mu, p, N)

    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError, match="not p-monotone"):
            left_extrapolate([1, 0, 1, 0, 1, 0], 1, 2)


class TestEdrCondition:
    def test_power_law_passes(self):
        d, beta, q = 3, 4.0, 1
        D = rising(beta, d) * 2 ** (beta + d)
        mu = [(k + 1.0) ** -beta for k in range(55 + d + 1)]
        rep = check_edr_condition(mu, d=d, q=q, D=D)
        assert rep.monotone_ok and rep.bound_ok
        assert rep.n_checked >= 50

    def test_alternating_fails_monotonicity(self):
        # Delta^4 of 0.75 + 0.25(-1)^k is 4(-1)^k: first negative at index 1
        mu = [1.0, 0.5] * 10
        rep = check_edr_condition(mu, d=3, q=1, D=1e6)
        assert not rep.monotone_ok
        assert rep.monotone_first_violation == 1

    def test_exponential_passes(self):
        d, q = 2, 2
        mu = [math.exp(-k) for k in range(2 * 40 + d + 1)]
        rep = check_edr_condition(mu, d=d, q=q, D=50.0)
        assert rep.monotone_ok
        assert rep.bound_ok

    def test_tail_model_admissibility(self):
        with pytest.raises(ValueError, match="beta > d"):
            Seq([1.0, 0.5], tail_model=TailModel(kind="power", beta=2.0), d=3)
        s = Seq([1.0, 0.5], tail_model=TailModel(kind="power", beta=4.0), d=3)
        assert s.tail_model is not None


class TestRoundTrip:
    def test_tail_sum_inverts_difference_exactly(self):
        # S^{p+1}(D^{p+1} a) = a for finitely supported integer sequences
        rng = np.random.default_rng(5)
        for p in range(7):
            supp = int(rng.integers(1, 5))
            a = [int(v) for v in rng.integers(-9, 10, size=supp)] + [0] * (p + 3)
            d = forward_difference(a, p + 1)
            back = tail_sum(d, p + 1, support=supp)
            assert back.values == tuple(a[:len(back)])

    def test_tail_sum_linearity(self):
        rng = np.random.default_rng(6)
        for p in (1, 2, 3):
            a = [int(v) for v in rng.integers(-9, 10, size=5)] + [0, 0, 0]
            b = [int(v) for v in rng.integers(-9, 10, size=5)] + [0, 0, 0]
            combo = [3 * x - 2 * y for x, y in zip(a, b)]
            lhs = tail_sum(Seq(combo, support=5), p).values
            rhs = tuple(3 * x - 2 * y for x, y in
                        zip(tail_sum(Seq(a, support=5), p).values,
                            tail_sum(Seq(b, support=5), p).values))
            assert lhs == rhs


def test_binom_a_paths_agree():
    # integer fast path and float recurrence agree where they overlap
    assert binom_a(3, 2) == 10
    assert binom_a(0, 5) == 1
    big = binom_a(40, 25)  # int path (sum 65 > 60 -> float); check consistency
    assert big == pytest.approx(math.comb(65, 40), rel=1e-12)
