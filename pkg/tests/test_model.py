from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fanomom import model
from fanomom.errors import ConvexityViolated, DivergentZeta


# Under normalized volume on the n-ball, x = -log|z|^2 is Exp(n); for
# u = a log|z|^2 the tilted law of -u/a is Exp(n - gamma a).
def ball_monomial_zeta(n, a, g):
    return n / (n - g * a)


class TestGeometry:
    @pytest.mark.parametrize("geom", [model.Ball(1), model.Ball(3), model.Proj(1), model.Proj(2)])
    def test_reference_density_is_probability(self, geom):
        x, w = geom.nodes_weights
        body = float(np.dot(geom.rho(x), w))
        total = integrate.quad(lambda s: geom.rho(s), -np.inf, np.inf if geom.kind == "proj" else 0.0,
                               limit=400)[0]
        assert total == pytest.approx(1.0, rel=1e-10)
        assert body == pytest.approx(1.0, rel=1e-8)

    def test_proj_h0_is_fubini_study(self):
        g = model.Proj(1)
        s = np.linspace(-30, 30, 13)
        assert np.allclose(g.dh0(s), 1 / (1 + np.exp(-s)), rtol=1e-14)
        # d2h0 stays accurate where sigma(1 - sigma) is tiny
        assert g.d2h0(np.array([-40.0]))[0] == pytest.approx(math.exp(-40) / (1 + math.exp(-40)) ** 2, rel=1e-12)


class TestZeta:
    @pytest.mark.parametrize("n,a,g", [(1, 1.0, 0.5), (1, 2.0, 0.45), (2, 0.5, 1.0), (3, 1.5, 1.9)])
    def test_monomial_closed_form(self, n, a, g):
        u = model.monomial_potential(model.Ball(n), a)
        assert model.zeta_eval(u, g) == pytest.approx(ball_monomial_zeta(n, a, g), rel=1e-10)

    def test_zero_potential(self):
        for geom in (model.Ball(2), model.Proj(2)):
            assert model.zeta_eval(model.zero_potential(geom), 0.7) == pytest.approx(1.0, rel=1e-12)

    def test_divergence_certificate(self):
        u = model.monomial_potential(model.Ball(1), 2.0)
        assert math.isinf(model.zeta_eval(u, 0.5))
        val, cert = model.zeta_eval(u, 0.6, with_certificate=True)
        assert math.isinf(val) and cert is not None and cert.side == "left"
        with pytest.raises(DivergentZeta):
            model.mu_moment(u, 0.6, 1)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_tilted_moments(self, p):
        n, a, g = 2, 0.5, 1.0
        u = model.monomial_potential(model.Ball(n), a)
        exact = a**p * math.factorial(p) / (n - g * a) ** p
        assert model.mu_moment(u, g, p) == pytest.approx(exact, rel=1e-10)

    def test_capped_against_direct_quadrature(self):
        geom = model.Ball(1)
        u = model.capped_monomial(geom, 2.0, 3.0)
        ref = integrate.quad(lambda s: math.exp(-0.4 * u.evaluate(np.array([s]))[0][0] + s), -200, 0,
                             points=[-3, -1.5], limit=400, epsabs=0, epsrel=1e-12)[0]
        assert model.zeta_eval(u, 0.4) == pytest.approx(ref, rel=1e-9)


class TestMongeAmpere:
    @pytest.mark.parametrize("n,a", [(1, 0.7), (2, 0.7), (3, 1.3)])
    def test_lelong_atom(self, n, a):
        left, right = model.ma_atoms(model.monomial_potential(model.Ball(n), a))
        assert left == pytest.approx(a**n, rel=1e-12) and right == 0.0

    def test_proj_total_mass(self):
        u = model.random_potential(model.Proj(2), 5)
        m = model.ma_pushforward(u)
        assert m.mass == pytest.approx(1.0, rel=1e-6)

    def test_energy_of_constant(self):
        for geom in (model.Proj(1), model.Proj(2)):
            assert model.energy(model.constant_potential(geom, -0.3)) == pytest.approx(-0.3, rel=1e-12)

    def test_energy_translation(self):
        u = model.random_potential(model.Proj(1), 2)
        assert model.energy(u.shifted(-1.25)) == pytest.approx(model.energy(u) - 1.25, rel=1e-10)

    def test_dp_proxy_of_constant(self):
        d = model.dp_proxy(model.constant_potential(model.Proj(1), -2.0), 2.0)
        assert d.ma_side == pytest.approx(2.0) and d.ref_side == pytest.approx(2.0)


class TestPotentials:
    def test_csv_roundtrip(self):
        u = model.random_potential(model.Proj(2), 7)
        v = model.RadialPotential.from_csv(u.to_csv())
        assert v.geometry.kind == "proj" and v.geometry.n == 2
        assert np.array_equal(v.phi, u.phi) and np.array_equal(v.dphi, u.dphi)

    def test_concave_profile_rejected(self):
        g = model.Ball(1)
        bad = model.RadialPotential.from_functions(g, lambda s: -s**2 / 100, lambda s: -s / 50,
                                                   lambda s: -np.ones_like(s) / 50)
        with pytest.raises(ConvexityViolated):
            model.check_admissible(bad)

    def test_corpus_is_admissible(self):
        for geom in (model.Ball(1), model.Proj(2)):
            for u in model.radial_corpus(geom):
                model.check_admissible(u)

    def test_evaluate_matches_nodes(self):
        u = model.capped_monomial(model.Ball(1), 2.0, 3.0)
        ph, dph, _ = u.evaluate(u.s[::50])
        assert np.array_equal(ph, u.phi[::50]) and np.array_equal(dph, u.dphi[::50])


@given(st.integers(0, 10**5), st.floats(0.05, 0.95))
def test_zeta_log_convex_and_increasing(seed, g):
    u = model.random_potential(model.Ball(1), seed)
    h = 0.02
    lz = [model.log_zeta(u, g + k * h) for k in (-1, 0, 1)] if g > h else None
    if lz:
        assert lz[2] - 2 * lz[1] + lz[0] >= -1e-10
        assert lz[2] >= lz[1] - 1e-12


@given(st.integers(0, 10**5), st.floats(-3.0, 3.0))
def test_twisted_ricci_shift_invariant(seed, c):
    u = model.random_potential(model.Proj(1), seed)
    a = model.twisted_ricci(u, 0.5)
    b = model.twisted_ricci(u.shifted(c), 0.5)
    assert np.allclose(a.rho, b.rho, atol=1e-9, equal_nan=True)
