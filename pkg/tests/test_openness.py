from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, strategies as st

from fanomom import model, openness
from fanomom.errors import NearPole, OrderUnsupported, PoleNotBracketed
from fanomom.openness import MonomialDivisor

G = sp.Symbol("gamma")


def sympy_log_zeta(exps):
    return -sum(sp.log(1 - G * sp.Rational(a)) for a in exps)


class TestMonomialDivisor:
    @pytest.mark.parametrize("exps,c,m", [((2,), Fraction(1, 2), 1), ((1, 1), 1, 2), ((3, 1), Fraction(1, 3), 1),
                                          ((3, 3, 1), Fraction(1, 3), 2), (("5/2", 1), Fraction(2, 5), 1)])
    def test_threshold_and_order(self, exps, c, m):
        d = MonomialDivisor(tuple(Fraction(a) for a in exps))
        assert d.c_u == c and d.m == m

    def test_parse(self):
        assert MonomialDivisor.parse("5/2, 1").exponents == (Fraction(5, 2), Fraction(1))

    def test_exact_rational_zeta(self):
        d = MonomialDivisor((3, 1))
        assert d.zeta(Fraction(1, 4)) == float(Fraction(1) / (Fraction(1, 4) * Fraction(3, 4)))
        assert math.isinf(d.zeta(Fraction(1, 3)))

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_log_derivative_against_sympy(self, k):
        exps = ("3", "1", "1/2")
        ref = sp.diff(sympy_log_zeta(exps), G, k).subs(G, sp.Rational(1, 5))
        d = MonomialDivisor(tuple(Fraction(a) for a in exps))
        assert d.exact_log_derivative(0.2, k) == pytest.approx(float(ref), rel=1e-13)


class TestNumericalDerivatives:
    def test_auto_uses_closed_form_for_monomials(self):
        d = MonomialDivisor((2, 1))
        assert list(openness.log_derivatives(d, 0.3, 3)) == [d.exact_log_derivative(0.3, k) for k in (1, 2, 3)]

    @pytest.mark.parametrize("g", [0.05, 0.2, 0.3])
    def test_richardson_matches_exact(self, g):
        d = MonomialDivisor((2, 1))
        est = openness.log_derivatives(d, g, 5, method="richardson")
        exact = np.array([d.exact_log_derivative(g, k) for k in range(1, 6)])
        # round-off grows with the order of the stencil
        assert np.all(np.abs(est / exact - 1) <= [1e-10, 1e-10, 1e-8, 5e-7, 1e-6])

    def test_radial_source(self):
        # log Z = -log(1 - 2 gamma) for u = 2 log|z|^2 on the unit disc
        src = openness.RadialSource.of(model.monomial_potential(model.Ball(1), 2.0))
        assert src.c_u == pytest.approx(0.5)
        est = openness.log_derivatives(src, 0.2, 3)
        exact = [math.factorial(k - 1) * 2**k / (1 - 0.4) ** k for k in (1, 2, 3)]
        assert np.allclose(est, exact, rtol=1e-7)

    def test_near_pole(self):
        d = MonomialDivisor((2,))
        with pytest.raises(NearPole):
            openness.log_derivatives(d, 0.5 - 1e-6, 3, method="richardson")


class TestBell:
    @pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 6) for k in range(1, n + 1)])
    def test_partial_bell_against_sympy(self, n, k):
        xs = sp.symbols(f"x1:{n - k + 2}")
        vals = [0.3, -1.1, 2.0, 0.7, -0.4][: n - k + 1]
        ref = sp.bell(n, k, xs).subs(dict(zip(xs, vals)))
        assert openness.partial_bell(n, k, vals) == pytest.approx(float(ref), rel=1e-13, abs=1e-13)

    def test_moments_from_cumulants_series(self):
        t = sp.Symbol("t")
        kappa = [0.4, 1.3, -0.2, 0.9, 0.05]
        gen = sp.exp(sum(sp.Float(c) * t**j / sp.factorial(j) for j, c in enumerate(kappa, 1)))
        ser = sp.series(gen, t, 0, 6).removeO()
        ref = [float(ser.coeff(t, p) * sp.factorial(p)) for p in range(1, 6)]
        assert np.allclose(openness.moments_from_derivatives(kappa), ref, rtol=1e-12)

    def test_exponential_law(self):
        lam = 1.7
        kappa = [math.factorial(j - 1) / lam**j for j in range(1, 6)]
        exact = [math.factorial(p) / lam**p for p in range(1, 6)]
        assert np.allclose(openness.moments_from_derivatives(kappa), exact, rtol=1e-13)

    def test_order_limit(self):
        with pytest.raises(OrderUnsupported):
            openness.bell_moment([1.0] * 6, [1.0] * 5, 6)


class TestMomentFit:
    def test_recovers_exact_plane(self):
        rng = np.random.default_rng(0)
        recs = [openness.MomentRecord(0.5, 2, 2.0 * m + 0.5 * w, m, w)
                for m, w in zip(rng.uniform(0.1, 5, 40), rng.uniform(2, 20, 40))]
        A, B = openness.fit_moment_constants(recs)
        assert A == pytest.approx(2.0, rel=1e-8) and B == pytest.approx(0.5, rel=1e-7)
        assert openness.envelope_change((A, B), (A, B), recs) == 0.0

    def test_monomial_record(self):
        # -u = a x with x ~ Exp(1 - gamma a): L^p norm is a (p!)^{1/p} / (1 - gamma a)
        u = model.monomial_potential(model.Ball(1), 1.0)
        r = openness.moment_bound_check(u, 0.5, 3)
        assert r.lhs == pytest.approx(6 ** (1 / 3) / 0.5, rel=1e-10)
        assert r.m1 == pytest.approx(2.0, rel=1e-10)
        assert r.weight == pytest.approx(4.0)

    def test_corpus_is_deterministic_and_nested(self):
        a = openness.moment_corpus(model.Ball(1), 6)
        b = openness.moment_corpus(model.Ball(1), 12)
        assert [u.label for u in a] == [u.label for u in b[:6]]


class TestOpenness:
    def test_not_applicable_at_threshold_one(self):
        assert isinstance(openness.openness_bound_check(MonomialDivisor((1,)), 0.5), openness.NotApplicable)

    @pytest.mark.parametrize("exps", [(2,), (3, 1), (3, 3, 1), (4, 1, 1)])
    def test_margins_nonnegative(self, exps):
        d = MonomialDivisor(exps)
        c = float(d.c_u)
        for g in c * np.linspace(0.02, 0.999, 30):
            assert openness.openness_bound_check(d, g).margin >= 0

    def test_corollary_b_makes_bound_hold(self):
        fams = [MonomialDivisor(e) for e in [(2,), (3, 1)]]
        grid = lambda d: list(float(d.c_u) * np.linspace(0.01, 0.99, 25))  # noqa: E731
        b = openness.fit_corollary_b(fams, grid)
        assert b >= 0
        assert all(openness.openness_bound_check(d, g, b=b).cor_margin >= -1e-12 for d in fams for g in grid(d))

    def test_exact_g_satisfies_riccati_bound(self):
        d = MonomialDivisor((3, 1))
        gam = float(d.c_u) * np.linspace(0.01, 0.99, 200)
        g = np.array([d.exact_log_derivative(x, 1) for x in gam])
        assert openness.ode_consistency(gam, g) <= 0


class TestPoles:
    @pytest.mark.parametrize("exps", [(2,), (1, 1), (3, 1), (3, 3, 1)])
    def test_estimate(self, exps):
        d = MonomialDivisor(exps)
        est = openness.estimate_cu(d.zeta, (0.01, 2.0))
        assert est.c_u == pytest.approx(float(d.c_u), abs=1e-6) and est.m == d.m

    def test_no_pole_in_interval(self):
        est = openness.estimate_cu(MonomialDivisor((1,)).zeta, (0.01, 0.5))
        assert math.isinf(est.c_u) and est.m is None

    def test_left_end_infinite(self):
        with pytest.raises(PoleNotBracketed):
            openness.estimate_cu(MonomialDivisor((4,)).zeta, (0.3, 1.0))

    def test_profile(self):
        d = MonomialDivisor((2, 1))
        prof = openness.build_profile(d, np.linspace(0.05, 0.45, 9), interval=(0.01, 1.0))
        assert prof.convexity_defect() <= 1e-12 and prof.monotonicity_defect() <= 0
        assert prof.c_u_hat == pytest.approx(0.5, abs=1e-6)


fractions = st.fractions(min_value=Fraction(1, 4), max_value=5, max_denominator=6)


@given(st.lists(fractions, min_size=1, max_size=4), st.floats(0.01, 0.99))
def test_monomial_margin_property(exps, frac):
    d = MonomialDivisor(tuple(exps))
    assume(d.c_u < 1)
    rec = openness.openness_bound_check(d, frac * float(d.c_u))
    assert rec.margin >= 0


@given(st.lists(fractions, min_size=1, max_size=4))
def test_pole_residue_equals_order(exps):
    d = MonomialDivisor(tuple(exps))
    c = float(d.c_u)
    g = c - 1e-9
    assert d.exact_log_derivative(g, 1) * (c - g) == pytest.approx(d.m, rel=1e-6)


@given(st.lists(fractions, min_size=1, max_size=3), st.floats(0.05, 0.9))
def test_bell_bridge_on_monomials(exps, frac):
    d = MonomialDivisor(tuple(exps))
    g = frac * float(d.c_u)
    derivs = [d.exact_log_derivative(g, k) for k in range(1, 6)]
    mom = openness.moments_from_derivatives(derivs)
    # moments of a sum of independent exponentials are positive and log-convex in p
    assert np.all(mom > 0)
    assert np.all(np.diff(np.log(mom), 2) >= -1e-9)
