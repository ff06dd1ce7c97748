from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special, stats

from fanomom import logconcave as lc
from fanomom.errors import MixedRepresentation, ZeroFirstMoment


def uniform(a=0.0, b=1.0, n=201):
    return lc.GridMeasure(np.linspace(a, b, n), np.ones(n))


def exponential(rate=1.0):
    t = np.linspace(0.0, 40.0 / rate, 4001)
    return lc.GridMeasure(t, rate * np.exp(-rate * t), (), None, rate)


def laplace_law():
    t = np.linspace(-30.0, 30.0, 6001)
    return lc.GridMeasure(t, 0.5 * np.exp(-np.abs(t)), (), 1.0, 1.0)


class TestGridMeasure:
    def test_mass_and_barycenter(self):
        m = uniform(1.0, 3.0)
        assert m.mass == pytest.approx(2.0, rel=1e-14)
        assert m.normalized().is_probability
        assert m.barycenter() == pytest.approx(2.0, rel=1e-14)

    def test_tail_mass_closed_form(self):
        # trapezoid body plus d0/rate for each attached tail
        m = lc.GridMeasure([0.0, 1.0], [2.0, 1.0], (), 4.0, 0.5)
        assert m.mass == pytest.approx(1.5 + 2.0 / 4.0 + 1.0 / 0.5, rel=1e-15)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            lc.GridMeasure([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            lc.GridMeasure([0.0, 1.0], [1.0, -1.0])

    def test_shift_moves_barycenter(self):
        m = lc.random_log_concave(3)
        assert m.shifted(0.7).barycenter() == pytest.approx(m.barycenter() - 0.7, abs=1e-12)

    def test_csv_roundtrip(self):
        m = lc.GridMeasure([0.0, 1.0, 2.0], [0.5, 1.0, 0.25], (), 2.0, 3.0)
        back = lc.from_csv(lc.to_csv(m))
        assert np.array_equal(back.nodes, m.nodes) and np.array_equal(back.densities, m.densities)
        assert (back.left_rate, back.right_rate) == (2.0, 3.0)


class TestMoments:
    @pytest.mark.parametrize("p", [1, 1.5, 2, 3, 4, 7.5])
    def test_exponential_moments(self, p):
        # E X^p = Gamma(p + 1) for the unit exponential law
        assert lc.moment_p(exponential(), p) == pytest.approx(math.gamma(p + 1), rel=1e-9)

    @pytest.mark.parametrize("p", [1, 2, 3.5])
    def test_uniform_moments(self, p):
        assert lc.moment_p(uniform(-1.0, 2.0), p) == pytest.approx(
            (1 + 2 ** (p + 1)) / (3 * (p + 1)), rel=1e-6)

    @pytest.mark.parametrize("p", [2, 3, 4])
    def test_exponential_ratio_is_factorial_root(self, p):
        assert lc.kahane_khinchin_ratio(exponential(), p) == pytest.approx(math.factorial(p) ** (1 / p), abs=1e-9)

    @pytest.mark.parametrize("p", [2, 4, 6])
    def test_gaussian_centered_ratio(self, p):
        t = np.linspace(-12.0, 12.0, 24001)
        m = lc.GridMeasure(t, stats.norm.pdf(t))
        exact = (2 ** (p / 2) * special.gamma((p + 1) / 2) / math.sqrt(math.pi)) ** (1 / p) / math.sqrt(2 / math.pi)
        assert lc.kahane_khinchin_ratio(m, p, centered=True) == pytest.approx(exact, rel=1e-6)

    def test_atoms_only(self):
        m = lc.GridMeasure(np.empty(0), np.empty(0), ((-1.0, 0.25), (2.0, 0.75)))
        assert lc.moment_p(m, 2) == pytest.approx(0.25 + 0.75 * 4)

    def test_zero_first_moment(self):
        with pytest.raises(ZeroFirstMoment):
            lc.kahane_khinchin_ratio(lc.GridMeasure.dirac(0.0), 2)


class TestLaplace:
    @pytest.mark.parametrize("g", [-0.7, 0.1, 0.5, 0.9])
    def test_laplace_against_quadrature(self, g):
        m = lc.GridMeasure([-1.0, 0.0, 0.5, 2.0], [0.3, 1.0, 0.8, 0.2], (), 1.5, 1.2)
        f = lambda x: np.interp(x, m.nodes, m.densities)  # noqa: E731
        ref = sum(integrate.quad(lambda x: math.exp(-g * x) * f(x), a, b)[0]
                  for a, b in zip(m.nodes[:-1], m.nodes[1:]))
        ref += 0.3 * math.exp(g) / (1.5 - g) + 0.2 * math.exp(-2 * g) / (1.2 + g)
        assert lc.laplace(m, g) == pytest.approx(ref, rel=1e-10)

    def test_laplace_of_exponential(self):
        # piecewise-linear interpolation of e^{-t} with step 0.01 is exact to ~1e-5
        for g in (0.1, 0.5, 0.9):
            assert lc.laplace(exponential().normalized(), g) == pytest.approx(1 / (1 + g), rel=1e-5)

    def test_tilt_is_probability(self):
        assert lc.tilt(laplace_law(), 0.4).mass == pytest.approx(1.0, rel=1e-9)


class TestLogConcavity:
    def test_gaussian(self):
        t = np.linspace(-8, 8, 1601)
        assert lc.is_log_concave(lc.GridMeasure(t, np.exp(-t**2 / 2)), 1e-10)[0]

    def test_bimodal_fails(self):
        t = np.linspace(-8, 8, 1601)
        dens = np.exp(-(t - 3) ** 2) + np.exp(-(t + 3) ** 2)
        flag, worst, loc = lc.is_log_concave(lc.GridMeasure(t, dens))
        assert not flag and worst > 0 and abs(loc) < 1.0

    def test_binomial_atoms_pass_lattice_test(self):
        atoms = tuple((k, special.comb(6, k)) for k in range(7))
        assert lc.is_log_concave(lc.GridMeasure(np.empty(0), np.empty(0), atoms))[0]

    def test_lattice_hole_fails(self):
        atoms = ((0.0, 1.0), (1.0, 0.01), (2.0, 1.0))
        assert not lc.is_log_concave(lc.GridMeasure(np.empty(0), np.empty(0), atoms))[0]

    def test_mixed_representation(self):
        m = lc.GridMeasure([0.0, 1.0], [1.0, 1.0], ((2.0, 1.0),))
        with pytest.raises(MixedRepresentation):
            lc.is_log_concave(m)


class TestDistances:
    def test_diracs(self):
        assert lc.wasserstein1(lc.GridMeasure.dirac(0.0), lc.GridMeasure.dirac(1.5)) == pytest.approx(1.5)

    def test_uniform_vs_center(self):
        assert lc.wasserstein1(uniform(), lc.GridMeasure.dirac(0.5)) == pytest.approx(0.25, rel=1e-6)

    def test_cdf_of_exponential(self):
        t = np.array([0.5, 1.0, 3.0, 50.0])
        assert np.allclose(lc.cdf(exponential(), t), -np.expm1(-t), atol=1e-6)


@given(st.integers(0, 10**6))
def test_random_measures_are_log_concave(seed):
    assert lc.is_log_concave(lc.random_log_concave(seed), 1e-9)[0]


@given(st.integers(0, 10**6))
def test_centered_second_moment_ratio_bounded_by_two(seed):
    assert lc.kahane_khinchin_ratio(lc.random_log_concave(seed), 2, centered=True) <= 2 + 1e-9


@given(st.integers(0, 10**6), st.floats(1.0, 4.0), st.floats(0.1, 3.0))
def test_ratio_monotone_in_p(seed, p, dp):
    # Lyapunov: p -> ||X||_p is nondecreasing
    m = lc.random_log_concave(seed)
    assert lc.kahane_khinchin_ratio(m, p + dp) >= lc.kahane_khinchin_ratio(m, p) - 1e-12


@given(st.integers(0, 10**6), st.floats(-5.0, 5.0))
def test_centered_ratio_translation_invariant(seed, c):
    m = lc.random_log_concave(seed)
    a = lc.kahane_khinchin_ratio(m, 3, centered=True)
    b = lc.kahane_khinchin_ratio(m.shifted(c), 3, centered=True)
    assert a == pytest.approx(b, rel=1e-8)


@given(st.integers(0, 10**6))
def test_cdf_monotone_and_bounded(seed):
    m = lc.random_log_concave(seed)
    t = np.linspace(m.nodes[0] - 1, m.nodes[-1] + 1, 300)
    F = lc.cdf(m, t)
    assert np.all(np.diff(F) >= -1e-15) and F[0] == 0 and F[-1] == pytest.approx(1.0, abs=1e-12)


def test_scipy_quad_agrees_with_closed_form_segments():
    m = lc.random_log_concave(11)
    f = lambda x: np.interp(x, m.nodes, m.densities)  # noqa: E731
    ref = integrate.quad(lambda x: abs(x) ** 2.5 * f(x), m.nodes[0], m.nodes[-1], points=[0.0], limit=500)[0]
    assert lc.moment_p(m, 2.5) == pytest.approx(ref, rel=1e-7)
