"""Shooting the radial Euler-Lagrange equation for rotation-symmetric extremals.

Run with ``python3 demos/radial_profile.py``.  On the lattice q = p + 1/j the
coherent profile A cos^{qj}(theta/2) solves the equation, and a scan over the
initial value u(0) finds it as the only admissible start.  Moving q off the
lattice breaks the closed form.
"""

import numpy as np

from spinwehrl import coherent_profile, el_residual, energy_diagnostic, shoot
from spinwehrl.radial import OdeProblem, boundary_scan


def main():
    prob = OdeProblem(2, 2.0, 3.0, 1.0)
    print("problem:", prob.to_dict())
    roots = boundary_scan(prob, (0.05, 10.0))
    print("admissible u(0):", roots, " expected A =", prob.A_expected)

    sol = shoot(prob, prob.A_expected)
    coh = coherent_profile(prob)
    n = sol.theta_grid.size
    print("sup |shot - coherent| =", float(np.max(np.abs(sol.u_values - coh.u_values[:n]))))
    print("residual of the shot  =", el_residual(prob, sol))
    print("energy deviation      =", energy_diagnostic(prob, coh))

    for u0 in (0.5 * prob.A_expected, 2 * prob.A_expected):
        s = shoot(prob, u0)
        what = f"reaches zero at theta = {s.theta_zero:.4f}" if s.hit_zero else f"u(pi) = {s.u_end:.4f}"
        print(f"u(0) = {u0:.4f}: {what}, flux {s.flux_end:.2e}")

    off = OdeProblem(2, 2.0, 3.5, 1.0)
    print("off the lattice (q = 3.5), coherent residual =", el_residual(off, coherent_profile(off)))


if __name__ == "__main__":
    main()
