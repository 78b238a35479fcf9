import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinwehrl import InvalidArgumentError, NumericDomainError
from spinwehrl.sphere import (SpherePoint, adapt_rule, build_quadrature, chordal_distance,
                              default_rule, exact_moment, integrate_flat, integrate_invariant,
                              unit_vector)

finite = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


class TestSpherePoint:
    def test_infinity_flag_excludes_coordinate(self):
        p = SpherePoint(3 + 1j, infinite=True)
        assert p.infinite and p.z == 0

    def test_nonfinite_coordinate_rejected(self):
        with pytest.raises(InvalidArgumentError):
            SpherePoint(complex(math.inf, 0))

    def test_coerce_infinite_number(self):
        assert SpherePoint.coerce(complex(math.inf, 0)).infinite

    @given(finite)
    def test_antipode_is_an_involution(self, z):
        p = SpherePoint(z)
        back = p.antipode().antipode()
        assert chordal_distance(p, back) <= 1e-12

    def test_antipode_swaps_zero_and_infinity(self):
        assert SpherePoint(0).antipode().infinite
        assert SpherePoint.infinity().antipode() == SpherePoint(0)

    @given(finite)
    def test_antipode_is_diametrically_opposite(self, z):
        p = SpherePoint(z)
        assert np.allclose(unit_vector(p.antipode()), -unit_vector(p), atol=1e-12)

    def test_chordal_distance_of_poles(self):
        assert chordal_distance(0, SpherePoint.infinity()) == pytest.approx(2.0)
        assert chordal_distance(1, 1j) == pytest.approx(math.sqrt(2))


class TestBuildQuadrature:
    def test_node_count_and_mass(self):
        r = build_quadrature(32, 64)
        assert len(r) == 2048
        assert abs(r.weights.sum() - 1) <= 1e-14

    @pytest.mark.parametrize("polar", ["graded", "angle", "cos"])
    @pytest.mark.parametrize("n", [2, 5, 8, 33])
    def test_weights_positive_and_normalized(self, polar, n):
        r = build_quadrature(n, 2 * n + 2, polar)
        assert np.all(r.weights > 0)
        assert abs(r.weights.sum() - 1) <= 1e-12

    def test_nodes_avoid_zero_and_infinity(self):
        r = build_quadrature(16, 32)
        assert np.all(np.isfinite(r.nodes))
        assert np.min(np.abs(r.nodes)) > 0

    @pytest.mark.parametrize("args", [(1, 8), (8, 3), (2.5, 8)])
    def test_too_small_or_fractional_resolution(self, args):
        with pytest.raises(InvalidArgumentError):
            build_quadrature(*args)

    def test_unknown_polar_variable(self):
        with pytest.raises(InvalidArgumentError):
            build_quadrature(8, 16, "bogus")

    def test_default_rule_is_cached(self):
        assert default_rule(64, 128) is default_rule(64, 128)


class TestIntegration:
    def test_constant(self):
        assert integrate_invariant(build_quadrature(8, 16), lambda z: np.ones(z.shape)) == pytest.approx(1, abs=1e-14)

    def test_first_moment(self, rule):
        val = integrate_invariant(rule, lambda z: np.abs(z) ** 2 / (1 + np.abs(z) ** 2) ** 2)
        assert abs(val - 1 / 6) <= 1e-10

    def test_odd_integrand_vanishes(self, rule):
        assert abs(integrate_invariant(rule, lambda z: z / (1 + np.abs(z) ** 2))) <= 1e-14

    def test_flat_measure(self, rule):
        assert integrate_flat(rule, lambda z: (1 + np.abs(z) ** 2) ** -2.0) == pytest.approx(1, abs=1e-14)
        assert abs(integrate_flat(rule, lambda z: (1 + np.abs(z) ** 2) ** -3.0) - 0.5) <= 1e-10
        assert abs(integrate_flat(rule, lambda z: z.real * (1 + np.abs(z) ** 2) ** -3.0)) <= 1e-14

    def test_flat_and_invariant_are_the_same_sum(self, rule):
        def g(z):
            return np.cos(z.real) * np.exp(-np.abs(z))
        a = integrate_flat(rule, lambda z: g(z) * (1 + np.abs(z) ** 2) ** -2.0)
        b = integrate_invariant(rule, g)
        assert a == pytest.approx(b, rel=1e-14)

    def test_nonfinite_value_reports_node(self):
        r = build_quadrature(4, 8)

        def g(z):
            out = np.ones(z.shape)
            out[5] = np.nan
            return out
        with pytest.raises(NumericDomainError) as info:
            integrate_invariant(r, g)
        assert info.value.index == 5

    def test_moment_convergence_is_monotone(self):
        pairs = [(k, m) for m in range(13) for k in range(m + 1)]
        errors = []
        for n in (8, 16, 32, 64):
            r = build_quadrature(n, 2 * n)
            errors.append(max(
                abs(integrate_invariant(r, lambda z: np.abs(z) ** (2 * k) / (1 + np.abs(z) ** 2) ** m)
                    - float(exact_moment(k, m)))
                for k, m in pairs))
        for coarse, fine in zip(errors, errors[1:]):
            assert fine <= max(coarse, 1e-14)
        assert errors[-1] <= 1e-13

    def test_adapted_rule_keeps_mass_and_accuracy(self, rule):
        a = adapt_rule(rule, [SpherePoint(0.3 + 0.2j), SpherePoint(-2)])
        assert abs(a.weights.sum() - 1) <= 1e-12
        val = integrate_invariant(a, lambda z: np.abs(z) ** 4 / (1 + np.abs(z) ** 2) ** 5)
        assert abs(val - float(exact_moment(2, 5))) <= 1e-12

    def test_adapted_rule_resolves_a_cusp(self, rule):
        # |z - c|^{1/2}-type singularity of the kind |f|^p produces at a zero of f
        c = 0.7 - 0.4j

        def g(z):
            return (np.abs(z - c) ** 2 / ((1 + np.abs(z) ** 2) * (1 + abs(c) ** 2))) ** 0.25
        coarse = integrate_invariant(adapt_rule(rule, [SpherePoint(c)]), g)
        fine = integrate_invariant(adapt_rule(default_rule(128, 256), [SpherePoint(c)]), g)
        # rotation invariance: same integral with the singularity at the north pole
        pole = integrate_invariant(rule, lambda z: (1 / (1 + np.abs(z) ** 2)) ** 0.25)
        assert abs(coarse - fine) <= 1e-10
        assert abs(coarse - pole) <= 1e-10


class TestExactMoment:
    @pytest.mark.parametrize("k, m, value", [(0, 0, 1), (1, 2, Fraction(1, 6)), (2, 2, Fraction(1, 3))])
    def test_values(self, k, m, value):
        assert exact_moment(k, m) == value

    def test_divergent(self):
        with pytest.raises(InvalidArgumentError):
            exact_moment(3, 2)

    @given(st.integers(0, 60), st.integers(0, 60))
    def test_pascal_recurrence(self, k, m):
        if k > m:
            k, m = m, k
        assert (m + 2) * exact_moment(k, m + 1) == (m + 1 - k) * exact_moment(k, m)

    @settings(max_examples=30)
    @given(st.integers(4097, 20000), st.integers(0, 20))
    def test_large_m_fallback(self, m, k):
        # k!(m-k)!/(m+1)! = 1 / ((m+1) C(m, k))
        expected = 1 / ((m + 1) * math.comb(m, k))
        assert exact_moment(k, m) == pytest.approx(expected, rel=1e-13)
