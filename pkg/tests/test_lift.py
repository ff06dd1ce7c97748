from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fanomom import lift, model
from fanomom.errors import DomainError
from fanomom.logconcave import is_log_concave, laplace


def chi_exact(v):
    # int_{s<-v} e^{s - e^s} ds = 1 - exp(-e^{-v})
    q = -np.expm1(-np.exp(-v))
    return -np.log(q), np.exp(-v - np.exp(-v)) / q


class TestConstants:
    @pytest.mark.parametrize("g", [0.05, 0.3, 0.5, 0.8, 0.95])
    def test_c_gamma_against_mpmath(self, g):
        # int e^{-x} x^a |log x| = Gamma(a+1) digamma(a+1) - 2 d/da gammainc(a+1, 0, 1), a = -gamma
        mpmath.mp.dps = 30
        a = mpmath.mpf(-g)
        inner = mpmath.diff(lambda b: mpmath.gammainc(b + 1, 0, 1), a)
        num = mpmath.gamma(a + 1) * mpmath.digamma(a + 1) - 2 * inner
        exact = float(num / mpmath.gamma(a + 1))
        assert lift.C_gamma(g) == pytest.approx(exact, rel=1e-11)
        assert lift.C_gamma(g, "exponential") == pytest.approx(exact, rel=1e-11)

    def test_g0_closed_form(self):
        assert lift.G0(0.5) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
        assert lift.G0(0.0) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            lift.C_gamma(1.0)
        with pytest.raises(DomainError):
            lift.G0(1.0)


class TestNu0:
    def test_zero_potential_density_is_fiber_volume(self):
        nu = lift.nu0(model.zero_potential(model.Ball(1)))
        assert np.allclose(nu.densities, lift.fiber_cdf(nu.nodes), rtol=1e-9, atol=1e-300)

    @pytest.mark.parametrize("g", [0.1, 0.5, 0.9])
    def test_zero_potential_laplace(self, g):
        # int e^{-gamma t} F(t) dt = Gamma(1 - gamma) / (2 gamma)
        nu = lift.nu0(model.zero_potential(model.Proj(1)))
        assert laplace(nu, g) == pytest.approx(math.gamma(1 - g) / (2 * g), rel=1e-6)

    def test_infinite_mass(self):
        nu = lift.nu0(model.zero_potential(model.Ball(1)))
        assert math.isinf(nu.mass) and nu.nodes.size >= 1000

    def test_stieltjes_form_agrees(self):
        # int e^{-gamma t} dV = gamma int e^{-gamma t} V dt
        u = model.capped_monomial(model.Ball(1), 2.0, 3.0)
        assert lift.stieltjes_laplace(u, 0.4) == pytest.approx(0.4 * laplace(lift.nu0(u), 0.4), rel=1e-6)


class TestFactorization:
    @pytest.mark.parametrize("geom", [model.Ball(1), model.Proj(1)])
    @pytest.mark.parametrize("g", [0.05, 0.5, 0.9])
    def test_capped(self, geom, g):
        u = model.radial_corpus(geom, n_random=0)[1]
        rep = lift.verify_factorization(u, g)
        assert rep.success and rep.rel_error <= 1e-5 and rep.nu0_logconcave
        assert rep.first_moment_lhs <= rep.first_moment_rhs

    def test_report_json(self):
        rep = lift.verify_factorization(model.zero_potential(model.Ball(1)), 0.3)
        assert '"success": true' in rep.to_json()


class TestChi:
    def test_closed_form(self):
        v = np.linspace(-10, 20, 61)
        chi, dchi = lift.chi_values(v)
        c0, d0 = chi_exact(v)
        assert np.allclose(chi, c0, rtol=1e-11, atol=1e-13)
        assert np.allclose(dchi, d0, rtol=1e-10)

    def test_check_passes(self):
        rep = lift.chi_check(np.linspace(-10, 20, 301))
        assert rep.passed and abs(rep.slope_at_end - 1) < 1e-4


@settings(max_examples=6)
@given(st.integers(0, 10**5), st.sampled_from(["ball", "proj"]))
def test_nu0_log_concave_on_random_potentials(seed, kind):
    geom = model.Ball(1) if kind == "ball" else model.Proj(1)
    nu = lift.nu0(model.random_potential(geom, seed))
    assert is_log_concave(nu, 1e-6)[0]


@given(st.floats(0.01, 0.99))
def test_c_gamma_positive_and_finite(g):
    c = lift.C_gamma(g)
    assert 0 < c < math.inf
