"""The Dirichlet-integral identity for |f|^{q/2} and the functionals built on it.

For f = (1+|z|^2)^{-j} P in F_j and u = |f|^{q/2},

    \\int |d u|^2 d^2z/pi = (qj/4) \\int |f|^q dmu,                    (*)

where d is the complex derivative d/dz.  Writing

    d u = u [ (q/4) P'/P - (qj/2) conj(z)/(1+|z|^2) ],

the combination (1+|z|^2)^2 |d u|^2 is a rotation-invariant function on
the sphere (the squared gradient of u in the round metric, up to a factor),
so the left side of (*) is an integral against dmu of an invariant density.
For |z| > 1 the density is evaluated through the rotated state z -> -1/z,
which avoids the cancellation between the two terms near infinity.

The regularized version with u_eps = (|P|^2+eps)^{q/4} (1+|z|^2)^{-qj/2} is
not rotation covariant and is evaluated in the original chart.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .entropy import ExponentPair, plain_p_norm, rule_for_state
from .errors import InvalidArgumentError, NumericDomainError
from .sphere import QuadratureRule, SpherePoint, integrate_flat, integrate_invariant
from .states import SpinState, husimi

__all__ = [
    "CarlenCheck",
    "abs_power_gradient_sq",
    "gradient_density",
    "carlen_residual",
    "carlen_epsilon_error",
    "regularized_terms",
    "variational_functional",
    "variational_ratio",
    "step1_ratio_check",
]

_NEAR_ZERO = 1e-12      # |P| below this (relative to the coefficients) counts as a zero
_REGULARIZATION = 1e-30


@dataclass(frozen=True)
class CarlenCheck:
    lhs: float
    rhs: float
    rel_residual: float
    q: float
    twice_j: int
    rule: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rule"] = list(self.rule)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _flipped(coeffs: np.ndarray) -> np.ndarray:
    # coefficients of the state rotated by z -> -1/z: c'_{2j-k} = (-1)^k c_k
    signs = (-1.0) ** np.arange(coeffs.size)
    return (signs * coeffs)[::-1]


def _inner_density(coeffs: np.ndarray, twice_j: int, q: float, z: np.ndarray) -> np.ndarray:
    # (1+|z|^2)^2 |d u|^2 for |z| <= 1, from P and P' directly
    j = twice_j / 2
    t = np.abs(z) ** 2
    P = np.polyval(coeffs[::-1], z)
    dP = np.polyval((coeffs[1:] * np.arange(1, coeffs.size))[::-1], z) if coeffs.size > 1 else 0 * z
    mod2 = np.abs(P) ** 2
    scale = float(np.max(np.abs(coeffs))) ** 2
    mod2 = np.where(mod2 <= (_NEAR_ZERO ** 2) * scale, mod2 + _REGULARIZATION * scale, mod2)
    # d u (1+t) (1+t)^{qj/2} = (q/4)(1+t) |P|^{q/2-2} conj(P) P' - (qj/2) |P|^{q/2} conj(z)
    amp = mod2 ** (q / 4 - 1)
    g = (q / 4) * (1 + t) * amp * np.conj(P) * dP - (q * j / 2) * amp * mod2 * np.conj(z)
    return np.abs(g) ** 2 * (1 + t) ** (-q * j)


def gradient_density(state: SpinState, q: float, z) -> np.ndarray:
    """The invariant density (1+|z|^2)^2 |d |f|^{q/2}|^2 at an array of finite points.

    Points within 1e-12 (relative) of a zero of P are evaluated with |P|^2
    shifted by 1e-30, so the result is always finite.
    """
    z = np.asarray(z, dtype=complex)
    c = state.array
    out = np.empty(z.shape, dtype=float)
    inner = np.abs(z) <= 1
    out[inner] = _inner_density(c, state.twice_j, q, z[inner])
    out[~inner] = _inner_density(_flipped(c), state.twice_j, q, -1 / z[~inner])
    return out


def abs_power_gradient_sq(state: SpinState, q: float, z) -> float:
    """|d |f|^{q/2}|^2 at a finite point (the flat-measure integrand).

    Raises :class:`NumericDomainError` at an exact zero of P when q < 4,
    where the analytic formula is an indeterminate 0 * inf.
    """
    q = float(q)
    if q <= 0:
        raise InvalidArgumentError(f"need q > 0, got {q!r}")
    p = SpherePoint.coerce(z)
    if p.infinite:
        raise InvalidArgumentError("abs_power_gradient_sq needs a finite point")
    if q < 4 and np.polyval(state.array[::-1], p.z) == 0:
        raise NumericDomainError(f"z = {p.z} is a zero of the state and q = {q} < 4", point=p.z)
    dens = gradient_density(state, q, np.array([p.z]))[0]
    return float(dens / (1 + abs(p.z) ** 2) ** 2)


def _rule_tag(rule: QuadratureRule) -> tuple:
    return (rule.n_polar, rule.n_azimuth)


def carlen_residual(state: SpinState, q: float, rule: QuadratureRule | None = None,
                    adapt: bool = True) -> CarlenCheck:
    """Both sides of the identity (*) with the same quadrature rule."""
    q = float(q)
    if q <= 0:
        raise InvalidArgumentError(f"need q > 0, got {q!r}")
    r = rule_for_state(state, rule, adapt)
    lhs = integrate_invariant(r, lambda z: gradient_density(state, q, z))
    rhs = q * state.j / 4 * integrate_invariant(r, lambda z: husimi(state, z) ** (q / 2))
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return CarlenCheck(lhs, rhs, rel, q, state.twice_j, _rule_tag(r))


def _log_terms(state: SpinState, eps: float, z: np.ndarray):
    c = state.array
    P = np.polyval(c[::-1], z)
    dP = np.polyval((c[1:] * np.arange(1, c.size))[::-1], z)
    reg = np.abs(P) ** 2 + eps
    return P, dP, reg, np.log1p(np.abs(z) ** 2)


def carlen_epsilon_error(state: SpinState, q: float, epsilon: float,
                         rule: QuadratureRule | None = None, adapt: bool = True) -> float:
    """E(eps) = (eps q/8) \\int (|P|^2+eps)^{q/2-2} |P'|^2 (1+|z|^2)^{-qj} d^2z/pi."""
    q, eps = float(q), float(epsilon)
    if eps < 0:
        raise InvalidArgumentError(f"epsilon must be >= 0, got {eps!r}")
    if eps == 0:
        return 0.0
    r = rule_for_state(state, rule, adapt)
    j = state.j

    def g(z):
        _, dP, reg, l1t = _log_terms(state, eps, z)
        with np.errstate(divide="ignore"):
            logv = (q / 2 - 2) * np.log(reg) + 2 * np.log(np.abs(dP)) - q * j * l1t
        return np.exp(logv)

    return eps * q / 8 * integrate_flat(r, g)


def regularized_terms(state: SpinState, q: float, epsilon: float,
                      rule: QuadratureRule | None = None, adapt: bool = True):
    """Return (lhs, rhs, error) of the eps-regularized identity.

    lhs = \\int |d u_eps|^2 d^2z/pi,
    rhs = (qj/4) \\int (|P|^2+eps)^{q/2} (1+|z|^2)^{-qj-2} d^2z/pi,
    error = E(eps).

    Expanding (1/4) d dbar (|P|^2+eps)^{q/2} shows the eps term enters with a
    minus sign, so the exact relation is lhs = rhs - error.
    """
    q, eps = float(q), float(epsilon)
    if eps <= 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {eps!r}")
    r = rule_for_state(state, rule, adapt)
    j = state.j

    def lhs_density(z):
        # (1+t)^2 |d u_eps|^2 = u_eps^2 |(q/4)(1+t) conj(P) P'/(|P|^2+eps) - (qj/2) conj(z)|^2
        P, dP, reg, l1t = _log_terms(state, eps, z)
        bracket = (q / 4) * np.exp(l1t) * np.conj(P) * dP / reg - (q * j / 2) * np.conj(z)
        return np.exp((q / 2) * np.log(reg) - q * j * l1t) * np.abs(bracket) ** 2

    def rhs_density(z):
        _, _, reg, l1t = _log_terms(state, eps, z)
        return np.exp((q / 2) * np.log(reg) - q * j * l1t)

    lhs = integrate_invariant(r, lhs_density)
    rhs = q * j / 4 * integrate_invariant(r, rhs_density)
    return lhs, rhs, carlen_epsilon_error(state, q, eps, r)


def _kappa(q: float, j: float) -> float:
    return 4 / (q * j * (q * j + 2))


def variational_functional(state: SpinState, q: float, exponents: ExponentPair,
                           rule: QuadratureRule | None = None, adapt: bool = True) -> float:
    """J(u) = ||u||_2^2 - 4/(qj(qj+2)) \\int |d u|^2 d^2z/pi for u = |f|^{q/2}."""
    q = float(q)
    if abs(q - exponents.q) > 1e-12:
        raise InvalidArgumentError(f"q = {q!r} does not match exponents.q = {exponents.q!r}")
    r = rule_for_state(state, rule, adapt)
    u2 = integrate_invariant(r, lambda z: husimi(state, z) ** (q / 2))
    dirichlet = integrate_invariant(r, lambda z: gradient_density(state, q, z))
    return u2 - _kappa(q, state.j) * dirichlet


def variational_ratio(state: SpinState, exponents: ExponentPair,
                      rule: QuadratureRule | None = None, adapt: bool = True) -> float:
    """J(u) / ||u||_{2p/q}^2, the quotient maximized in the nesting proof.

    Note ||u||_{2p/q}^2 = ||f||_p^q (plain norms).
    """
    r = rule_for_state(state, rule, adapt)
    J = variational_functional(state, exponents.q, exponents, r)
    return J / plain_p_norm(state, exponents.p, r) ** exponents.q


def step1_ratio_check(state: SpinState, exponents: ExponentPair,
                      rule: QuadratureRule | None = None, adapt: bool = True):
    """Return (ratio_plain, ratio_carlen); the identity (*) makes them equal.

    ratio_plain  = ||f||_q^q / ||f||_p^q,
    ratio_carlen = (||f||_q^q - kappa \\int |d u|^2) / ((1 - 1/(qj+2)) ||f||_p^q),
    with plain norms and kappa = 4/(qj(qj+2)).
    """
    if state.is_zero():
        raise InvalidArgumentError("ratio of norms of the zero state is undefined")
    p, q = exponents.p, exponents.q
    if p == q:
        return 1.0, 1.0
    r = rule_for_state(state, rule, adapt)
    j = state.j
    nq = integrate_invariant(r, lambda z: husimi(state, z) ** (q / 2))
    npq = plain_p_norm(state, p, r) ** q
    dirichlet = integrate_invariant(r, lambda z: gradient_density(state, q, z))
    ratio_plain = nq / npq
    ratio_carlen = (nq - _kappa(q, j) * dirichlet) / ((1 - 1 / (q * j + 2)) * npq)
    return ratio_plain, ratio_carlen

