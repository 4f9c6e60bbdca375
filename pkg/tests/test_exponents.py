import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_rd.errors import (
    DomainError,
    InvalidParameterError,
    OutOfModelError,
    PreconditionError,
)
from nonlocal_rd.exponents import (
    INF,
    RegimeReport,
    classify,
    existence_threshold,
    holder_exponents,
    interpolation_exponents,
    midpoint_exponent,
    moser_exponents,
    sobolev_exponent,
    sweep_equivalence,
)


def exact_holder(k, alpha, beta, p):
    """Rational-arithmetic evaluation of θ, λ, b for the midpoint k'."""
    k, alpha, beta, p = map(Fraction, (k, alpha, beta, p))
    big = k + alpha - 1
    kp = (big + beta) / 2
    theta = (1 / beta - 1 / kp) / (1 / beta - 1 / big)
    lam = (k / (2 * kp) - k / (2 * big)) / (k / (2 * kp) - 1 / p)
    b = (1 - lam) * big / (1 - lam * big / k)
    return kp, theta, b, b * theta / big


class TestSobolev:
    def test_values(self):
        assert sobolev_exponent(1) == INF
        assert sobolev_exponent(3) == 6
        assert sobolev_exponent(4) == 4
        assert sobolev_exponent(2) is None
        assert sobolev_exponent(2, 5.0) == 5.0

    @pytest.mark.parametrize("n", [0, -1, 1.5])
    def test_bad_dimension(self, n):
        with pytest.raises(DomainError):
            sobolev_exponent(n)

    @pytest.mark.parametrize("p2", [2.0, 1.0, INF])
    def test_bad_p2(self, p2):
        with pytest.raises(InvalidParameterError):
            sobolev_exponent(2, p2)


class TestClassify:
    def test_n3_covered(self):
        r = classify(3, 1.5, 1)
        assert r.threshold == pytest.approx(5 / 3, abs=1e-15)
        assert r.covered

    def test_n3_not_covered(self):
        assert not classify(3, 2.0, 1).covered

    def test_boundary_not_covered(self):
        assert not classify(3, 5 / 3, 1).covered

    def test_n2_supremal(self):
        r = classify(2, 1.8, 1)
        assert r.threshold == 2.0
        assert r.covered
        assert r.fujita_exponent == 2.0
        assert not r.p_attained

    def test_n2_with_p(self):
        r = classify(2, 1.4, 1, p2=4.0)
        assert r.threshold == 1.5 and r.p_attained and r.covered

    def test_n1(self):
        r = classify(1, 1.5, 1)
        assert r.p == INF and r.threshold == 2.0 and r.fujita_exponent == 3.0

    @pytest.mark.parametrize("n", [2, 3, 4, 7])
    def test_beta_one_is_fujita(self, n):
        r = classify(n, 1.0, 1.0)
        assert r.threshold == pytest.approx(r.fujita_exponent)

    @pytest.mark.parametrize("alpha,beta", [(0.5, 1), (1, 0.9)])
    def test_out_of_model(self, alpha, beta):
        with pytest.raises(OutOfModelError):
            classify(3, alpha, beta)

    def test_threshold_formula(self):
        for n in (3, 4, 5, 10):
            for beta in (1.0, 2.5):
                assert classify(n, 1, beta).threshold == pytest.approx(1 + 2 * beta / n)

    def test_dict_roundtrip(self):
        r = classify(1, 1.2, 2)
        assert RegimeReport.from_dict(r.to_dict()) == r

    @given(st.floats(1, 6), st.floats(1, 6))
    def test_monotone(self, b1, b2):
        lo, hi = sorted((b1, b2))
        ths = [classify(n, 1, lo).threshold for n in range(3, 12)]
        assert all(a >= b for a, b in zip(ths, ths[1:]))
        if hi > lo:
            for n in (1, 2, 3, 5):
                assert classify(n, 1, hi).threshold > classify(n, 1, lo).threshold


class TestInterpolation:
    def test_hand_values(self):
        e = interpolation_exponents(1, 2, 6)
        assert e.lam == pytest.approx(0.6)
        assert e.valid
        assert e.gamma == pytest.approx(2.0)

    def test_invalid_young(self):
        e = interpolation_exponents(1, 3, 6)
        assert e.lam == pytest.approx(0.8)
        assert not e.valid
        assert math.isnan(e.gamma)

    def test_degenerate_limit(self):
        e = interpolation_exponents(2, 2 + 1e-9, 6)
        assert e.lam == pytest.approx(0, abs=1e-8)
        assert e.gamma == pytest.approx(2, rel=1e-8)

    @pytest.mark.parametrize("r,q,p", [(2, 2, 6), (0.5, 2, 6), (1, 7, 6), (3, 2, 6)])
    def test_ordering(self, r, q, p):
        with pytest.raises(DomainError):
            interpolation_exponents(r, q, p)

    @given(
        st.floats(1, 5),
        st.floats(0.01, 5),
        st.sampled_from([INF, 6.0, 4.0, 10 / 3, 2.5]),
    )
    def test_flag_matches_condition(self, r, dq, p):
        q = r + dq
        if not q < p:
            return
        e = interpolation_exponents(r, q, p)
        assert 0 < e.lam < 1
        cond = q / r < 2 / r + 1 - 2 * (0 if p == INF else 1 / p)
        margin = abs(q / r - (2 / r + 1 - (0 if p == INF else 2 / p)))
        if margin > 1e-9:
            assert e.valid == cond
        if e.valid:
            assert e.gamma == pytest.approx(2 * (1 - e.lam) * q / (2 - e.lam * q))


class TestHolder:
    def test_alpha_one(self):
        h = holder_exponents(2, 1, 1, 6)
        assert h.k_prime == 1.5
        assert h.theta == pytest.approx(2 / 3)
        assert h.b == pytest.approx(2.0)
        assert h.ratio == pytest.approx(2 / 3)
        assert h.small_exponent

    def test_alpha_three_halves(self):
        h = holder_exponents(2, 1.5, 1, 6)
        kp, theta, b, ratio = exact_holder(2, Fraction(3, 2), 1, 6)
        assert h.k_prime == 1.75 == kp
        assert h.theta == pytest.approx(5 / 7) and theta == Fraction(5, 7)
        assert h.b == pytest.approx(3.0625) and b == Fraction(49, 16)
        assert h.ratio == pytest.approx(0.875) and ratio == Fraction(7, 8)
        assert h.small_exponent

    def test_boundary(self):
        _, _, _, ratio = exact_holder(2, Fraction(5, 3), 1, 6)
        assert ratio == 1
        h = holder_exponents(2, 5 / 3, 1, 6)
        assert h.ratio == pytest.approx(1.0, abs=1e-12)
        assert not h.small_exponent

    def test_step3_midpoint(self):
        assert midpoint_exponent(4, 1.5, 1) == 2.75

    def test_precondition_low_k(self):
        with pytest.raises(PreconditionError, match="2\\(alpha-1\\)/\\(p-2\\)"):
            holder_exponents(1.0, 1.5, 1, 6)
        with pytest.raises(PreconditionError):
            holder_exponents(0.4, 2.0, 1, 3)

    def test_precondition_kprime(self):
        with pytest.raises(PreconditionError, match="beta"):
            holder_exponents(1.5, 1, 3, INF)

    def test_infeasible_reported(self):
        # k' = 1.75 sits below p(α-1)/(p-2) = 2 for n=4, α=2: reported, not raised
        h = holder_exponents(1.5, 2, 1, 4)
        assert not h.feasible

    @settings(max_examples=300)
    @given(
        st.sampled_from([1, 3, 4, 5, 10]),
        st.floats(1, 4),
        st.floats(1, 4),
        # the identity is ill-conditioned as k+α-1 -> β, so stay off that edge
        st.floats(1e-2, 10),
    )
    def test_ranges_and_midpoint_identity(self, n, alpha, beta, dk):
        p = sobolev_exponent(n)
        low = max(0 if p == INF else 2 * (alpha - 1) / (p - 2), 1, beta - alpha + 1)
        h = holder_exponents(low + dk, alpha, beta, p)
        assert 0 < h.theta < 1
        assert 0 < h.lam < 1
        assert abs(h.midpoint_defect) < 1e-12

    def test_alpha_one_always_small(self):
        for n in (1, 3, 4, 5, 10):
            p = sobolev_exponent(n)
            for beta in (1, 2, 3.7):
                for k in (beta + 0.01, beta + 1, beta + 9):
                    assert holder_exponents(k, 1, beta, p).small_exponent


class TestMoser:
    def test_q0(self):
        m = moser_exponents(1, 1.5, 2.0, 6)
        assert m.q_km1 == pytest.approx(2.0 + 1.5)

    def test_hand_values(self):
        m = moser_exponents(3, 1.5, 1, 6)
        assert m.q_k == 9.5 and m.q_km1 == 5.5
        assert m.gamma2 == pytest.approx(9.5 / 5.5)
        assert m.delta1 == pytest.approx((9.5 - 11 / 6) / 4.5)
        assert m.delta1 == pytest.approx(1.7037, abs=1e-4)
        assert m.d0 == pytest.approx(2.4211, abs=1e-4)
        assert m.gamma1 == pytest.approx(1 + 4.5 / 4.75)
        assert m.gamma1_ok and m.gamma2_ok

    def test_infinite_p_limits(self):
        m = moser_exponents(2, 1.5, 1, INF)
        # p(α-1)/(p-2) -> α-1, 2q/p -> 0
        assert m.gamma1 == pytest.approx(1 + (m.q_k + 0.5 - m.q_km1) / (m.q_km1 - 0.5))
        assert m.delta1 == pytest.approx(m.q_k / (m.q_k + 0.5 - m.q_km1))

    def test_boundary_gamma1_is_two(self):
        m = moser_exponents(4, 5 / 3, 1, 6)
        assert m.gamma1 == pytest.approx(2.0, abs=1e-12)
        assert m.gamma1_ok

    @given(st.integers(1, 30), st.floats(1, 50), st.floats(1, 50),
           st.sampled_from([INF, 6.0, 4.0, 2.5]))
    def test_gamma2_below_two(self, k, alpha, beta, p):
        assert moser_exponents(k, alpha, beta, p).gamma2 < 2

    @given(st.integers(1, 20), st.floats(1, 4), st.sampled_from([1, 3, 4, 5, 10]))
    def test_delta1_above_one_when_covered(self, k, beta, n):
        p = sobolev_exponent(n)
        thr = existence_threshold(beta, p)
        m = moser_exponents(k, 1 + 0.999 * (thr - 1), beta, p)
        assert m.delta1 > 1 and m.d0 == pytest.approx(m.delta1 / (m.delta1 - 1))

    def test_bad_index(self):
        with pytest.raises(DomainError):
            moser_exponents(0, 1.5, 1, 6)


class TestSweep:
    def test_small_sweep_clean(self):
        rep = sweep_equivalence(samples=2000, seed=3)
        assert rep.ok, rep.counterexamples[:2]

    def test_counterexample_dump(self, monkeypatch):
        import nonlocal_rd.exponents as ex

        real = ex.holder_exponents

        def broken(*a):
            h = real(*a)
            return type(h)(**{**h.__dict__, "small_exponent": not h.small_exponent})

        monkeypatch.setattr(ex, "holder_exponents", broken)
        rep = ex.sweep_equivalence(samples=5, seed=0)
        assert len(rep.counterexamples) == 5
        assert {"n", "alpha", "beta", "k", "holder", "moser"} <= set(rep.counterexamples[0])
