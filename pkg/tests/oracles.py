"""Independent reference values used by the tests.

None of these call into the library's quadrature.  Basis states z^k become
Beta densities in x = 1/(1 + |z|^2): with rho = (2j+1)|f|^2 and
dmu = dx, rho(x) = Beta(2j-k+1, k+1) density, so every Wehrl-type quantity
reduces to a one-dimensional integral over [0, 1].
"""

import math

import numpy as np
from scipy import integrate
from scipy.special import betaln, digamma


def basis_density(twice_j, k):
    """x -> (2j+1) |e_k|^2 for the normalized basis state of z^k."""
    a, b = twice_j - k, k
    log_c = -betaln(a + 1, b + 1)
    return lambda x: np.exp(log_c) * x ** a * (1 - x) ** b


def basis_wehrl_closed_form(twice_j, k):
    """Differential entropy of Beta(a, b) plus ln(2j+1)."""
    a, b = twice_j - k + 1, k + 1
    h = (betaln(a, b) - (a - 1) * digamma(a) - (b - 1) * digamma(b)
         + (a + b - 2) * digamma(a + b))
    return h + math.log(twice_j + 1)


def basis_wehrl_radial(twice_j, k):
    """-int_0^1 rho ln(rho/(2j+1)) dx by adaptive 1-d quadrature."""
    rho = basis_density(twice_j, k)

    def integrand(x):
        r = rho(x)
        return 0.0 if r == 0 else -r * math.log(r / (twice_j + 1))

    val, _ = integrate.quad(integrand, 0, 1, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def basis_renyi_radial(twice_j, k, q):
    """(2/(2-q)) ln((qj+1) int |f|^q dmu), with int |f|^q = (2j+1)^{-q/2} int rho^{q/2} dx."""
    rho = basis_density(twice_j, k)
    val, _ = integrate.quad(lambda x: rho(x) ** (q / 2), 0, 1, epsabs=1e-15, epsrel=1e-13)
    j = twice_j / 2
    return 2 / (2 - q) * math.log((q * j + 1) * (twice_j + 1) ** (-q / 2) * val)


def coherent_log_derivative(twice_j):
    """int |K(., 0)|^2 ln|K(., 0)|^2 dmu = -2j int_0^inf (1+t)^{-2j-2} ln(1+t) dt."""
    a = twice_j + 2
    return -twice_j / (a - 1) ** 2


def coherent_carlen_q2(twice_j):
    """j/(2(2j+1)): the q = 2 Dirichlet integral, the same for every normalized state."""
    j = twice_j / 2
    return j / (2 * (2 * j + 1))


def coherent_profile_values(theta, A, qj):
    """A cos(theta/2)^{qj}, the closed-form radial profile, and its theta-derivative."""
    c = np.cos(theta / 2)
    return A * c ** qj, -A * qj / 2 * c ** (qj - 1) * np.sin(theta / 2)
