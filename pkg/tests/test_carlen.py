import json

import numpy as np
import pytest

from oracles import coherent_carlen_q2
from spinwehrl import InvalidArgumentError, NumericDomainError
from spinwehrl.carlen import (abs_power_gradient_sq, carlen_epsilon_error, carlen_residual,
                              regularized_terms, step1_ratio_check, variational_functional,
                              variational_ratio)
from spinwehrl.entropy import ExponentPair
from spinwehrl.search import random_state
from spinwehrl.states import SU2Element, apply_su2, coherent_state, evaluate, make_state


def fd_gradient_sq(state, q, z, h=1e-5):
    # |d u|^2 = (u_x^2 + u_y^2) / 4 for real u, central differences
    def u(w):
        return abs(evaluate(state, w)) ** (q / 2)
    ux = (u(z + h) - u(z - h)) / (2 * h)
    uy = (u(z + 1j * h) - u(z - 1j * h)) / (2 * h)
    return (ux ** 2 + uy ** 2) / 4


class TestGradient:
    @pytest.mark.parametrize("z", [0.3, 1 + 1j, -2.5j, 7])
    def test_coherent_closed_form(self, z):
        t = abs(z) ** 2
        assert abs_power_gradient_sq(coherent_state(2, 0), 2, z) == pytest.approx(t / (1 + t) ** 4, rel=1e-12)

    def test_vanishes_at_coherent_peak(self):
        assert abs_power_gradient_sq(coherent_state(3, 0), 3, 0) == pytest.approx(0, abs=1e-30)

    def test_finite_difference_cross_check(self, rng):
        for i in range(100):
            tj = int(rng.integers(1, 7))
            f = random_state(tj, [21, i])
            q = float(rng.choice([2, 2 + 2 / tj, 3, 4, 5]))
            z = complex(*rng.standard_normal(2)) * 2
            exact = abs_power_gradient_sq(f, q, z)
            assert abs(exact - fd_gradient_sq(f, q, z)) <= 1e-6 * exact

    def test_exact_zero_below_q4(self):
        f = make_state(2, [0, 1, 0])          # zero at z = 0
        with pytest.raises(NumericDomainError):
            abs_power_gradient_sq(f, 3, 0)
        assert abs_power_gradient_sq(f, 4, 0) == pytest.approx(0, abs=1e-20)

    def test_rejects_infinity_and_bad_q(self):
        f = coherent_state(2, 0)
        with pytest.raises(InvalidArgumentError):
            abs_power_gradient_sq(f, 2, complex(np.inf, 0))
        with pytest.raises(InvalidArgumentError):
            abs_power_gradient_sq(f, 0, 1)


class TestIdentity:
    def test_coherent_q2(self, rule):
        chk = carlen_residual(coherent_state(2, 0), 2, rule)
        assert abs(chk.lhs - 1 / 6) <= 1e-8 and abs(chk.rhs - 1 / 6) <= 1e-8

    @pytest.mark.parametrize("tj", range(1, 7))
    def test_q2_value_is_state_independent(self, tj, rule):
        for i in range(5):
            chk = carlen_residual(random_state(tj, [22, i]), 2, rule)
            assert abs(chk.lhs - coherent_carlen_q2(tj)) <= 1e-6

    @pytest.mark.parametrize("tj", range(1, 7))
    def test_random_states(self, tj, rule):
        for i in range(8):
            f = random_state(tj, [23, i])
            for q in (2, 2 + 2 / tj, 4, 5):
                assert carlen_residual(f, q, rule).rel_residual <= 1e-6

    def test_refinement(self, fine_rule):
        for tj in (1, 3, 6):
            chk = carlen_residual(random_state(tj, 24), 2 + 2 / tj, fine_rule)
            assert chk.rel_residual <= 1e-9

    def test_multiple_zero(self, rule):
        # a double root makes |f|^{q/2} only C^1 there; the identity still holds
        from spinwehrl.states import state_from_roots
        f = state_from_roots(3, [0.5, 0.5, -2j])
        assert carlen_residual(f, 3, rule).rel_residual <= 1e-8

    def test_serialization(self, rule):
        chk = carlen_residual(random_state(2, 1), 3, rule)
        d = json.loads(chk.to_json())
        assert set(d) == {"lhs", "rhs", "rel_residual", "q", "twice_j", "rule"}
        assert d["rule"] == [64, 128]
        assert chk.rel_residual == abs(chk.lhs - chk.rhs) / abs(chk.rhs)


class TestRegularization:
    def test_zero_epsilon(self):
        assert carlen_epsilon_error(random_state(2, 0), 3, 0) == 0

    def test_negative_epsilon(self):
        with pytest.raises(InvalidArgumentError):
            carlen_epsilon_error(random_state(2, 0), 3, -1e-3)

    def test_error_decreases_to_zero(self, rule):
        f = random_state(2, 25)
        errs = [carlen_epsilon_error(f, 3, eps, rule) for eps in (1e-2, 1e-4, 1e-6)]
        assert errs[0] > errs[1] > errs[2] > 0
        assert errs[2] < 1e-6

    @pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-5])
    def test_regularized_identity(self, eps, rule):
        # exact relation: lhs(eps) = rhs(eps) - E(eps)
        lhs, rhs, err = regularized_terms(random_state(2, 26), 3, eps, rule)
        assert abs(lhs - rhs + err) <= 1e-7
        if eps >= 1e-3:
            # large enough that the opposite sign convention would fail
            assert 2 * err > 1e-7

    def test_regularized_terms_reduce_to_identity(self, rule):
        f = random_state(3, 27)
        lhs, rhs, _ = regularized_terms(f, 4, 1e-14, rule)
        chk = carlen_residual(f, 4, rule)
        assert lhs == pytest.approx(chk.lhs, rel=1e-9) and rhs == pytest.approx(chk.rhs, rel=1e-9)


class TestFunctionals:
    def test_coherent_value(self, rule):
        e = ExponentPair(2, 3)
        assert abs(variational_functional(coherent_state(2, 0), 3, e, rule) - 0.2) <= 1e-8

    def test_q_must_match(self):
        with pytest.raises(InvalidArgumentError):
            variational_functional(coherent_state(2, 0), 4, ExponentPair(2, 3))

    def test_rotation_invariance(self, rule):
        f = random_state(2, 28)
        g = SU2Element.random(np.random.default_rng(3))
        e = ExponentPair(2, 3)
        a = variational_functional(f, 3, e, rule)
        assert abs(variational_functional(apply_su2(g, f), 3, e, rule) - a) <= 1e-8

    def test_coherent_maximizes_ratio_on_lattice(self, rule):
        e = ExponentPair.lattice(2, 2, 1)           # p = 2, q = 3 at j = 1
        best = variational_ratio(coherent_state(2, 0), e, rule)
        for i in range(30):
            assert variational_ratio(random_state(2, [29, i]), e, rule) <= best + 1e-6

    def test_step1_coherent(self, rule):
        plain, carlen = step1_ratio_check(coherent_state(2, 0), ExponentPair(2, 3), rule)
        assert plain == pytest.approx(3 ** 1.5 / 4, abs=1e-7)
        assert carlen == pytest.approx(3 ** 1.5 / 4, abs=1e-7)

    def test_step1_equal_exponents(self):
        assert step1_ratio_check(random_state(3, 0), ExponentPair(2.5, 2.5))[0] == 1

    @pytest.mark.parametrize("tj", [1, 2, 3, 4])
    def test_step1_identity(self, tj, rule):
        for i in range(25):
            plain, carlen = step1_ratio_check(random_state(tj, [30, i]), ExponentPair(2, 3), rule)
            assert abs(plain - carlen) <= 1e-6 * plain

    def test_step1_zero_state(self):
        with pytest.raises(InvalidArgumentError):
            step1_ratio_check(make_state(1, [0, 0]), ExponentPair(2, 3))
