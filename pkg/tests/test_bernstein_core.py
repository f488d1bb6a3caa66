import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asgdual.bernstein_core import (BernsteinVector, Polynomial, bcv_from_monomial,
                                    bernstein_basis, bernstein_eval, degree_elevate,
                                    hypergeom_pmf, hypergeom_vector, monomial_from_bcv)
from oracles import bernstein_direct

GRID = np.linspace(0, 1, 11)


class TestEval:
    def test_identity_polynomial(self):
        assert bernstein_eval([0, 1], 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_degree_two_identity(self):
        assert bernstein_eval([0, 0.5, 1], 0.7) == pytest.approx(0.7, abs=1e-12)

    def test_balancing_vanishes_at_half(self):
        assert bernstein_eval([0, 1 / 3, -1 / 3, 0], 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_endpoints_exact(self):
        v = [0.3, -2.0, 7.5, 1.25]
        assert bernstein_eval(v, 0.0) == 0.3
        assert bernstein_eval(v, 1.0) == 1.25

    @pytest.mark.parametrize("x", [-0.1, 1.5, math.nan])
    def test_domain(self, x):
        with pytest.raises(ValueError):
            bernstein_eval([0, 1], x)

    def test_accepts_vector_type(self):
        assert bernstein_eval(BernsteinVector([1, 1, 1]), 0.3) == pytest.approx(1.0)

    @pytest.mark.parametrize("m", [0, 1, 5, 40, 200])
    def test_partition_of_unity(self, m):
        for x in GRID:
            assert bernstein_basis(m, x).sum() == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=14), st.floats(0, 1))
    def test_matches_direct_sum(self, v, x):
        assert bernstein_eval(v, x) == pytest.approx(bernstein_direct(v, x), abs=1e-9)


class TestConversion:
    def test_balancing_drift(self):
        v = bcv_from_monomial(Polynomial([0, 1, -3, 2]), 3).v
        np.testing.assert_allclose(v, [0, 1 / 3, -1 / 3, 0], atol=1e-12)

    def test_constant(self):
        np.testing.assert_allclose(bcv_from_monomial(Polynomial([1]), 2).v, [1, 1, 1], atol=1e-12)

    def test_genic_drift(self):
        v = bcv_from_monomial(Polynomial([0, -1, 1]), 2).v
        np.testing.assert_allclose(v, [0, -0.5, 0], atol=1e-12)

    def test_degree_too_small(self):
        with pytest.raises(ValueError):
            bcv_from_monomial(Polynomial([0, 1, 1]), 1)

    @pytest.mark.parametrize("v,coeffs", [
        ([0, 0.5, 1], [0, 1, 0]),
        ([1, 1, 1], [1, 0, 0]),
        ([0, 1 / 3, -1 / 3, 0], [0, 1, -3, 2]),
    ])
    def test_to_monomial(self, v, coeffs):
        np.testing.assert_allclose(monomial_from_bcv(BernsteinVector(v)).coeffs, coeffs, atol=1e-12)

    @settings(max_examples=200)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=13), st.integers(0, 4))
    def test_round_trip(self, coeffs, extra):
        p = Polynomial(coeffs)
        m = p.degree + extra
        back = monomial_from_bcv(bcv_from_monomial(p, m)).coeffs
        scale = max(1.0, max(abs(c) for c in coeffs))
        np.testing.assert_allclose(back[:len(coeffs)], coeffs, atol=1e-12 * scale * 10 ** (m / 4))
        assert all(abs(c) <= 1e-9 * scale for c in back[len(coeffs):])

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=9))
    def test_values_preserved(self, coeffs):
        p = Polynomial(coeffs)
        v = bcv_from_monomial(p, p.degree + 2)
        for x in GRID:
            assert bernstein_eval(v, x) == pytest.approx(p(x), abs=1e-9)


class TestElevation:
    def test_linear(self):
        np.testing.assert_allclose(degree_elevate(BernsteinVector([0, 1]), 2).v, [0, 0.5, 1])

    def test_same_degree(self):
        v = BernsteinVector([0.2, -1, 3])
        assert degree_elevate(v, 2) == v

    def test_constant(self):
        np.testing.assert_allclose(degree_elevate(BernsteinVector([1, 1]), 3).v, [1, 1, 1, 1])

    def test_lower_target(self):
        with pytest.raises(ValueError):
            degree_elevate(BernsteinVector([0, 1, 0]), 1)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=10), st.integers(0, 20))
    def test_point_values(self, v, extra):
        vec = BernsteinVector(v)
        up = degree_elevate(vec, vec.degree + extra)
        for x in GRID:
            assert bernstein_eval(up, x) == pytest.approx(bernstein_eval(vec, x), abs=1e-12 * 5 * len(v))


class TestHypergeometric:
    def test_small_case(self):
        assert hypergeom_pmf(4, 2, 2, 1) == pytest.approx(2 / 3, abs=1e-12)

    @pytest.mark.parametrize("n,k", [(5, 3), (12, 12), (300, 7)])
    def test_all_marked(self, n, k):
        assert hypergeom_pmf(n, n, k, k) == pytest.approx(1.0, abs=1e-12)

    def test_exhaustive_draw(self):
        assert hypergeom_pmf(2, 1, 2, 1) == pytest.approx(1.0, abs=1e-12)

    def test_outside_support(self):
        assert hypergeom_pmf(5, 2, 3, 3) == 0.0
        assert hypergeom_pmf(5, 4, 3, 0) == 0.0

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            hypergeom_pmf(3, 4, 1, 0)

    @given(st.integers(1, 500).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n))))
    def test_sums_to_one(self, args):
        n, marked, draws = args
        assert hypergeom_vector(n, marked, draws).sum() == pytest.approx(1.0, abs=1e-12)

    @given(st.integers(1, 40).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n), st.integers(0, n))))
    def test_matches_exact_counts(self, args):
        n, marked, draws, i = args
        exact = math.comb(marked, i) * math.comb(n - marked, draws - i) / math.comb(n, draws) \
            if 0 <= draws - i <= n - marked and i <= marked else 0.0
        assert hypergeom_pmf(n, marked, draws, i) == pytest.approx(exact, abs=1e-12)
