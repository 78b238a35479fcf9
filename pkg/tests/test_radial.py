import json
import math

import numpy as np
import pytest

from oracles import coherent_profile_values
from spinwehrl import IntegrationFailure, InvalidArgumentError
from spinwehrl.entropy import ExponentPair
from spinwehrl.radial import (OdeProblem, RadialSolution, boundary_scan, boundary_value,
                              coherent_profile, default_grid, el_residual, energy_diagnostic,
                              equilibrium_value, problem_from_exponents, shoot)

CANON = OdeProblem(2, 2, 3, 1)            # j = 1, p = 2, q = 3, b = 1
FAMILY = [OdeProblem(tj, 2, 2 + 2 / tj, 1) for tj in (1, 2, 3)]


class TestProblem:
    def test_canonical_constants(self):
        assert CANON.s == pytest.approx(4 / 3)
        assert CANON.A_expected == pytest.approx((5 / 3) ** 1.5, rel=1e-14)
        assert CANON.A_expected == pytest.approx(2.151657, abs=1e-6)
        qj = 3
        assert CANON.beta_theta == qj * (qj + 2) / 4
        assert CANON.alpha_theta == qj * (qj + 2) / 4 * CANON.b_el
        assert CANON.on_lattice

    def test_from_exponents(self):
        p = problem_from_exponents(3, ExponentPair(2, 2 + 2 / 3), 0.5)
        assert p.on_lattice and p.b_el == 0.5

    def test_off_lattice_accepted(self):
        p = OdeProblem(2, 2, 4, 1)
        assert not p.on_lattice and p.s == 1

    @pytest.mark.parametrize("args", [(2, 1.4, 3, 1), (2, 3, 3, 1), (2, 3, 2, 1), (2, 2, 3, 0),
                                      (2, 2, 3, -1), (0, 2, 3, 1)])
    def test_invalid(self, args):
        with pytest.raises(InvalidArgumentError):
            OdeProblem(*args)

    def test_equilibrium(self):
        p = OdeProblem(3, 2, 3, 2.0)
        u = equilibrium_value(p)
        assert p.phi(u) == pytest.approx(0, abs=1e-12)


class TestCoherentProfile:
    def test_values(self):
        sol = coherent_profile(CANON)
        assert sol.u_values[-1] == pytest.approx(0, abs=1e-30)
        assert sol.theta_grid[-1] == pytest.approx(math.pi)
        # theta = 0 is the limit of the first samples
        assert sol.u_values[0] == pytest.approx(CANON.A_expected, rel=1e-4)
        half = coherent_profile(CANON, amplitude=1.0)
        i = np.argmin(np.abs(half.theta_grid - math.pi / 2))
        assert half.u_values[i] == pytest.approx(0.5 ** 1.5)

    def test_matches_oracle(self):
        sol = coherent_profile(CANON)
        u, du = coherent_profile_values(sol.theta_grid, CANON.A_expected, 3)
        assert np.allclose(sol.u_values, u, rtol=1e-14, atol=1e-300)
        assert np.allclose(sol.du_values, du, rtol=1e-12, atol=1e-300)

    @pytest.mark.parametrize("prob", FAMILY + [CANON, OdeProblem(4, 2.5, 3.0, 0.7)])
    def test_solves_equation_on_lattice(self, prob):
        assert el_residual(prob, coherent_profile(prob)) <= 1e-8

    def test_fails_off_lattice(self):
        prob = OdeProblem(2, 2, 4, 1)
        assert el_residual(prob, coherent_profile(prob)) > 1e-2


class TestShoot:
    def test_reproduces_coherent_profile(self):
        sol = shoot(CANON, CANON.A_expected)
        u, _ = coherent_profile_values(sol.theta_grid, CANON.A_expected, 3)
        assert np.max(np.abs(sol.u_values - u)) <= 1e-6
        assert el_residual(CANON, sol) <= 1e-5

    def test_overshoot_misses_boundary(self):
        sol = shoot(CANON, 2 * CANON.A_expected)
        assert sol.hit_zero and sol.theta_zero < math.pi - 1e-2
        assert sol.boundary_value < -1e-2
        assert np.all(sol.u_values >= 0)

    def test_undershoot_misses_boundary(self):
        sol = shoot(CANON, 0.5 * CANON.A_expected)
        assert not sol.hit_zero and sol.u_end > 1e-2

    def test_regular_start(self):
        sol = shoot(CANON, 1.3)
        assert sol.u_values[0] > 0
        # u'(theta) ~ 2 a theta near 0
        assert abs(sol.du_values[0]) <= 10 * sol.theta_grid[0] * abs(CANON.phi(1.3))

    @pytest.mark.parametrize("u0", [0.4, 1.0, 1.7, 2.6, 4.0])
    def test_self_consistency(self, u0):
        assert el_residual(CANON, shoot(CANON, u0)) <= 1e-5

    def test_constant_solution(self):
        u = equilibrium_value(CANON)
        sol = shoot(CANON, u)
        assert np.ptp(sol.u_values) <= 1e-12

    def test_admissible_solution_decreases(self):
        for prob in FAMILY:
            sol = shoot(prob, prob.A_expected)
            inside = sol.u_values > 1e-8
            assert np.all(np.diff(sol.u_values[inside]) < 1e-10)

    def test_rk4_order(self):
        errors = []
        for n in (50, 100, 200):
            sol = shoot(CANON, CANON.A_expected, theta_end=2.5, method="rk4", n_steps=n)
            u, _ = coherent_profile_values(sol.theta_grid, CANON.A_expected, 3)
            errors.append(np.max(np.abs(sol.u_values - u)))
        assert errors[0] / errors[1] >= 8 and errors[1] / errors[2] >= 8

    @pytest.mark.parametrize("kwargs", [{"method": "euler"}, {"method": "rk4"},
                                        {"theta_end": 4.0}])
    def test_bad_options(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            shoot(CANON, 1.0, **kwargs)

    @pytest.mark.parametrize("u0", [0, -1, math.inf])
    def test_bad_start(self, u0):
        with pytest.raises(InvalidArgumentError):
            shoot(CANON, u0)

    def test_step_collapse(self, monkeypatch):
        import spinwehrl.radial as radial

        class Broken:
            status, message, t = -1, "step size too small", np.array([0.001, 1.25])
        monkeypatch.setattr(radial, "solve_ivp", lambda *a, **k: Broken())
        with pytest.raises(IntegrationFailure) as info:
            shoot(CANON, 1.0)
        assert info.value.theta_reached == 1.25


class TestBoundaryScan:
    def test_unique_root(self):
        A = CANON.A_expected
        roots = boundary_scan(CANON, (0.1 * A, 10 * A), 64)
        assert len(roots) == 1 and abs(roots[0] - A) <= 1e-4

    def test_resolution_stability(self):
        A = CANON.A_expected
        coarse = boundary_scan(CANON, (0.1 * A, 10 * A), 64)
        fine = boundary_scan(CANON, (0.1 * A, 10 * A), 128)
        assert len(fine) == 1 and abs(fine[0] - coarse[0]) <= 1e-8

    def test_range_without_root(self):
        A = CANON.A_expected
        assert boundary_scan(CANON, (1.2 * A, 10 * A), 32) == []
        assert boundary_scan(CANON, (0.1 * A, 0.9 * A), 32) == []

    @pytest.mark.parametrize("prob", FAMILY)
    def test_family(self, prob):
        A = prob.A_expected
        roots = boundary_scan(prob, (0.1 * A, 10 * A), 64)
        assert len(roots) == 1 and abs(roots[0] - A) <= 1e-4

    def test_boundary_value_changes_sign_at_root(self):
        A = CANON.A_expected
        assert boundary_value(CANON, 0.99 * A) > 0 > boundary_value(CANON, 1.01 * A)

    @pytest.mark.parametrize("rng_", [(0, 1), (2, 1), (-1, 3)])
    def test_bad_range(self, rng_):
        with pytest.raises(InvalidArgumentError):
            boundary_scan(CANON, rng_, 16)


class TestEnergy:
    def test_coherent_dissipation_identity(self):
        assert energy_diagnostic(CANON, coherent_profile(CANON)) <= 1e-6

    def test_refinement(self):
        coarse = energy_diagnostic(CANON, coherent_profile(CANON, 64))
        fine = energy_diagnostic(CANON, coherent_profile(CANON, 128))
        assert coarse / fine >= 3

    def test_constant_solution(self):
        u = equilibrium_value(CANON)
        sol = shoot(CANON, u)
        energy = 2 * sol.du_values ** 2 + CANON.Phi_r(sol.u_values)
        assert np.ptp(energy) <= 1e-10
        assert energy_diagnostic(CANON, sol) <= 1e-10

    def test_shot_solution(self):
        assert energy_diagnostic(CANON, shoot(CANON, 1.5)) <= 1e-5

    def test_halved_prefactor_breaks_the_identity(self):
        # using r(1+r^2) in place of 2r(1+r^2) leaves an O(1) defect
        sol = coherent_profile(CANON)
        t, du = sol.theta_grid[:-1], sol.du_values[:-1]
        r = np.tan(t / 2)
        ur = 2 * du / (1 + r ** 2)
        diff = r * (1 + r ** 2) * ur ** 2
        assert np.max(diff[(r > 0.1) & (r < 10)]) > 1e-2


class TestSerialization:
    def test_csv_and_json(self):
        sol = coherent_profile(CANON, 16)
        lines = sol.to_csv().splitlines()
        assert lines[0] == "theta,u,du" and len(lines) == 17
        assert float(lines[1].split(",")[1]) == sol.u_values[0]
        d = json.loads(sol.to_json())
        assert d["problem"]["A_expected"] == CANON.A_expected and d["problem"]["on_lattice"]
        assert len(d["theta"]) == 16

    def test_solution_validation(self):
        t = default_grid(8)
        with pytest.raises(InvalidArgumentError):
            RadialSolution(t, t[:-1], t, CANON, 1.0)
        with pytest.raises(InvalidArgumentError):
            RadialSolution(t[::-1], t, t, CANON, 1.0)

    def test_nonuniform_grid_rejected(self):
        t = np.linspace(0.1, 3.0, 40) ** 1.04
        sol = RadialSolution(t, np.exp(-t), -np.exp(-t), CANON, 1.0)
        with pytest.raises(InvalidArgumentError):
            el_residual(CANON, sol)
