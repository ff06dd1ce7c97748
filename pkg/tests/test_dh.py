from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from fanomom import dh, logconcave as lc
from fanomom.errors import DegenerateBody, DomainError

Body = dh.ConvexBodySpec


def lattice_weights(f, k, n):
    """Brute-force k f(p/k) over lattice points of k * simplex."""
    pts = [p for p in itertools.product(range(k + 1), repeat=n) if sum(p) <= k]
    return sorted(k * f([Fraction(x, k) for x in p]) for p in pts)


class TestBodies:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_simplex_volume(self, n):
        assert Body.simplex(n).volume == pytest.approx(1 / math.factorial(n), rel=1e-12)

    def test_cube_contains(self):
        c = Body.cube(2)
        assert c.contains((Fraction(1, 2), Fraction(1))) and not c.contains((Fraction(3, 2), Fraction(0)))

    def test_degenerate(self):
        with pytest.raises((DegenerateBody, DomainError)):
            Body(((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1)), (Fraction(2), Fraction(2))))

    def test_json(self):
        b = Body.from_json({"vertices": [["0", "0"], ["1/2", "0"], ["0", "3/10"]]})
        assert b.volume == pytest.approx(0.075)
        spec = dh.TCFunctionSpec.from_json({"body": {"vertices": [["0"], ["1"]]},
                                            "pieces": [{"coeffs": ["1"], "const": "0"}], "nonnegative": True})
        assert spec(( Fraction(1, 3),)) == Fraction(1, 3)
        with pytest.raises(DomainError):
            dh.TCFunctionSpec.from_json({"body": {"vertices": [["0"], ["1"]]}, "pieces": [], "extra": 1})


class TestPushforward:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_simplex_coordinate_is_beta(self, n):
        # x_1 on the standard simplex has law Beta(1, n)
        m = dh.okounkov_pushforward(Body.simplex(n), dh.AffineMap((1,) + (0,) * (n - 1)))
        for p in (1, 2, 3):
            exact = special.beta(p + 1, n) / special.beta(1, n)
            assert lc.moment_p(m, p) == pytest.approx(exact, rel=1e-5)

    def test_square_sum_is_triangular(self):
        m = dh.okounkov_pushforward(Body.cube(2), dh.AffineMap((1, 1)))
        t = np.array([0.25, 0.5, 1.0, 1.5])
        assert np.allclose(lc.cdf(m, t), np.where(t <= 1, t**2 / 2, 1 - (2 - t) ** 2 / 2), atol=1e-6)

    def test_constant_functional_is_atom(self):
        m = dh.okounkov_pushforward(Body.simplex(2), dh.AffineMap((0, 0), Fraction(1, 3)))
        assert m.atoms == ((pytest.approx(1 / 3), pytest.approx(1.0)),)


class TestWeights:
    def test_p1_linear(self):
        d = dh.toric_tc_weights(dh.preset("p1-linear"), 7)
        assert d.weights == tuple(range(8)) and d.N_k == 8

    @pytest.mark.parametrize("name,k", [("p2-linear", 5), ("p2-tent", 6), ("p3-linear", 4)])
    def test_brute_force(self, name, k):
        spec = dh.preset(name)
        assert sorted(dh.toric_tc_weights(spec, k).weights) == lattice_weights(spec, k, spec.body.n)

    def test_limit_has_tent_atom(self):
        lim = dh.dh_limit(dh.preset("p2-tent"))
        assert lim.atoms[0][0] == pytest.approx(0.5) and lim.atoms[0][1] == pytest.approx(0.75)

    @pytest.mark.parametrize("k", [10, 20, 40, 80])
    def test_w1_rate(self, k):
        d = dh.toric_tc_weights(dh.preset("p1-linear"), k)
        # uniform atoms on {0, 1/k, ..., 1} against Lebesgue: int |F_k(t) - t| exactly
        exact = Fraction(0)
        for j in range(k):
            a, b, c = Fraction(j, k), Fraction(j + 1, k), Fraction(j + 1, k + 1)
            exact += ((c - a) ** 2 + (b - c) ** 2) / 2 if a < c < b else abs((a + b) / 2 - c) * (b - a)
        assert lc.wasserstein1(d.empirical, d.limit) == pytest.approx(float(exact), rel=1e-6)
        assert float(exact) <= 2 / k


class TestNorms:
    @pytest.mark.parametrize("p", [1, 2, 4, 8])
    def test_uniform(self, p):
        m = dh.dh_limit(dh.preset("p1-linear"))
        r = dh.tc_norms(m, p)
        assert r.uncentered == pytest.approx((1 / (p + 1)) ** (1 / p), rel=1e-6)
        assert r.centered == pytest.approx(0.5 / (p + 1) ** (1 / p), rel=1e-6)
        assert r.barycenter == pytest.approx(0.5)

    def test_envelope(self):
        assert dh.kk_envelope(2) == pytest.approx(2.0)
        assert dh.kk_envelope(4) == pytest.approx(math.sqrt(2) * 24 ** 0.25)

    def test_reverse_holder_simplex(self):
        m = dh.dh_limit(dh.preset("p2-linear"))
        rep = dh.reverse_holder_report(m, 2, (1, 2, 4, 8))
        assert rep.nonneg_support and rep.tail_concave and rep.logconcave and rep.ok
        assert all(r.ratio <= 3 for r in rep.rows)

    def test_dirac(self):
        rep = dh.reverse_holder_report(lc.GridMeasure.dirac(0.3), 2, (2, 8))
        assert all(r.ratio == pytest.approx(1.0) for r in rep.rows)


class TestNormalCone:
    def test_counts_and_limit(self):
        rep = dh.normal_cone_weights(2, Fraction(1, 10), 60)
        assert rep.data.N_k == math.comb(62, 2)
        lim = dh.normal_cone_limit(2, 0.1)
        assert lim.atoms[0] == (pytest.approx(0.1), pytest.approx(0.99)) and lim.mass == pytest.approx(1.0)

    def test_counterexample_shape(self):
        rep = dh.normal_cone_weights(2, Fraction(1, 10), 60, (1, 2, 3, 4, 8))
        assert not rep.logconcave and rep.increasing
        assert rep.centered_ratios[-1] / rep.centered_ratios[1] >= 1.25

    def test_weight_rule(self):
        rep = dh.normal_cone_weights(2, Fraction(1, 4), 8)
        # d monomials of degree d in 2 variables, weight min(d, 2)
        assert rep.data.histogram() == {0: 1, 1: 2, 2: sum(d + 1 for d in range(2, 9))}

    def test_domain(self):
        with pytest.raises(DomainError):
            dh.normal_cone_weights(1, Fraction(1, 10), 10)


coeff = st.integers(-3, 3)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), st.lists(coeff, min_size=n, max_size=n))))
def test_pushforward_log_concave(data):
    n, coeffs = data
    if all(c == 0 for c in coeffs):
        return
    m = dh.okounkov_pushforward(Body.simplex(n), dh.AffineMap(tuple(coeffs)))
    assert lc.is_log_concave(m, 1e-8)[0]


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.integers(0, 3), min_size=n, max_size=n))),
       st.sampled_from([1, 2, 4, 8]))
def test_nonneg_linear_obeys_n_plus_one(data, p):
    n, coeffs = data
    if all(c == 0 for c in coeffs):
        return
    m = dh.okounkov_pushforward(Body.simplex(n), dh.AffineMap(tuple(coeffs)))
    assert dh.tc_norms(m, p).uncentered / dh.tc_norms(m, 1).uncentered <= n + 1


@given(st.integers(2, 30))
def test_weight_count_is_lattice_count(k):
    assert dh.toric_tc_weights(dh.preset("p2-linear"), k).N_k == math.comb(k + 2, 2)
