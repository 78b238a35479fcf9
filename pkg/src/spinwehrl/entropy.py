"""Normalized p-norms, Wehrl and Renyi-Wehrl entropies, and the entropy bounds.

For f in F_j the normalized p-norm is

    nnorm_p(f) = ((p j + 1) \\int |f|^p dmu)^{1/p},

which equals 1 for every coherent vector and every p.  The plain norm
``||f||_p = (\\int |f|^p dmu)^{1/p}`` is exposed as :func:`plain_p_norm`.

Quadrature
----------
|f|^p and |f|^2 ln|f|^2 are smooth except at the Majorana points, where they
have power-type (or logarithmic) singularities.  Unless told otherwise the
functions here therefore integrate over ``adapt_rule(rule, roots)``, a copy
of the rule recentred on every distinct zero of f.  Pass ``adapt=False`` to
use the rule as given.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidArgumentError, PreconditionError
from .sphere import QuadratureRule, adapt_rule, default_rule, integrate_invariant
from .states import MixedState, SpinState, husimi, majorana_roots

__all__ = [
    "ExponentPair",
    "EntropyReport",
    "rule_for_state",
    "normalized_p_norm",
    "plain_p_norm",
    "norm_profile",
    "wehrl_entropy",
    "renyi_wehrl",
    "mixed_wehrl",
    "lieb_bound",
    "theorem2_bound",
    "bound_gap",
    "interpolation_bound",
    "entropy_report",
    "norm_log_derivative_check",
]

NORMALIZATION_TOL = 1e-10
_UNDERFLOW = 1e-300


@dataclass(frozen=True)
class ExponentPair:
    """Norm exponents q >= p >= 1, optionally tied to the lattice q = p + n/j."""

    p: float
    q: float
    lattice_n: int | None = None
    twice_j: int | None = None

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (math.isfinite(p) and math.isfinite(q)) or p < 1 or q < p:
            raise InvalidArgumentError(f"need q >= p >= 1, got p={p!r}, q={q!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if self.lattice_n is not None:
            if self.twice_j is None:
                raise InvalidArgumentError("lattice_n needs twice_j")
            if self.lattice_n < 0:
                raise InvalidArgumentError("lattice_n must be non-negative")
            if abs(q - p - 2 * self.lattice_n / self.twice_j) > 1e-12:
                raise InvalidArgumentError(
                    f"q = {q!r} is not p + n/j for n = {self.lattice_n}, j = {self.twice_j}/2")

    @classmethod
    def lattice(cls, twice_j: int, p: float, n: int) -> "ExponentPair":
        """The pair (p, p + n/j) covered by the nesting theorem."""
        return cls(p, p + 2 * n / twice_j, n, twice_j)

    @property
    def on_lattice(self) -> bool:
        return self.lattice_n is not None


def rule_for_state(state, rule: QuadratureRule | None = None, adapt: bool = True) -> QuadratureRule:
    """The rule used to integrate functions of |f|: ``rule`` recentred on f's zeros.

    ``state`` may be a :class:`SpinState` or a :class:`MixedState` (zeros of
    all members are used).  An already adapted rule is returned unchanged.
    """
    rule = default_rule() if rule is None else rule
    if not adapt or rule.centers:
        return rule
    members = state.members if isinstance(state, MixedState) else (state,)
    roots = [r for m in members for r in majorana_roots(m)]
    return adapt_rule(rule, roots)


def _log_density(state: SpinState, nodes: np.ndarray) -> np.ndarray:
    rho = husimi(state, nodes)
    with np.errstate(divide="ignore"):
        return np.log(rho)


def _check_p(p):
    p = float(p)
    if not math.isfinite(p) or p < 1:
        raise InvalidArgumentError(f"norm exponent must satisfy p >= 1, got {p!r}")
    return p


def _is_even_integer(p: float) -> bool:
    return p == int(p) and int(p) % 2 == 0


def _exact_even_power_integral(state: SpinState, p: int) -> float:
    # (pj+1) \int |f|^p dmu = sum_n |a_n|^2 / C(pj, n), a = coefficients of P^{p/2}
    m = p // 2
    poly = np.array([1.0 + 0j])
    for _ in range(m):
        poly = np.convolve(poly, state.array)
    deg = m * state.twice_j
    binom = np.array([math.comb(deg, n) for n in range(deg + 1)], dtype=float)
    return float(np.sum(np.abs(poly) ** 2 / binom))


def normalized_p_norm(state: SpinState, p: float, rule: QuadratureRule | None = None,
                      adapt: bool = True, exact: bool = True) -> float:
    """((pj+1) \\int |f|^p dmu)^{1/p}.

    Even integer p use the exact coefficient formula (the rule is ignored)
    unless ``exact=False``.  On the quadrature path an even power |f|^p is a
    smooth polynomial on the sphere, so the unadapted rule is used: the
    partition weights of the adapted rule would only add error there.
    """
    p = _check_p(p)
    if state.is_zero():
        return 0.0
    even = _is_even_integer(p)
    if exact and even:
        return _exact_even_power_integral(state, int(p)) ** (1 / p)
    r = rule_for_state(state, rule, adapt and not even)
    integral = integrate_invariant(r, lambda z: husimi(state, z) ** (p / 2))
    return ((p * state.j + 1) * integral) ** (1 / p)


def plain_p_norm(state: SpinState, p: float, rule: QuadratureRule | None = None,
                 adapt: bool = True) -> float:
    """(\\int |f|^p dmu)^{1/p}, the norm without the (pj+1) prefactor."""
    p = _check_p(p)
    return normalized_p_norm(state, p, rule, adapt) / (p * state.j + 1) ** (1 / p)


def norm_profile(state: SpinState, ps, rule: QuadratureRule | None = None,
                 adapt: bool = True, with_entropy: bool = False) -> dict:
    """Normalized norms for several exponents from one evaluation of |f|^2.

    Returns ``{p: nnorm_p}``; with ``with_entropy`` the key ``"wehrl"`` holds
    -(2j+1) \\int |f|^2 ln|f|^2 dmu (no normalization check).
    """
    ps = [_check_p(p) for p in ps]
    r = rule_for_state(state, rule, adapt)
    logrho = _log_density(state, r.nodes)
    w = r.weights
    out = {}
    for p in ps:
        integral = float(np.sum(w * np.exp(0.5 * p * logrho)))
        out[p] = ((p * state.j + 1) * integral) ** (1 / p)
    if with_entropy:
        ent = _entropy_integrand(np.exp(logrho))
        out["wehrl"] = -(state.twice_j + 1) * float(np.sum(w * ent))
    return out


def _check_normalized(state: SpinState):
    n = state.norm()
    if abs(n - 1) > NORMALIZATION_TOL:
        raise PreconditionError(f"state must be normalized, got ||f||_2 = {n!r}")


def _entropy_integrand(rho: np.ndarray) -> np.ndarray:
    safe = np.where(rho < _UNDERFLOW, 1.0, rho)
    return np.where(rho < _UNDERFLOW, 0.0, rho * np.log(safe))


def wehrl_entropy(state: SpinState, rule: QuadratureRule | None = None, adapt: bool = True) -> float:
    """S_j(|f|^2) = -(2j+1) \\int |f|^2 ln|f|^2 dmu for normalized f (nats)."""
    _check_normalized(state)
    r = rule_for_state(state, rule, adapt)
    return -(state.twice_j + 1) * integrate_invariant(r, lambda z: _entropy_integrand(husimi(state, z)))


def renyi_wehrl(state: SpinState, q: float, rule: QuadratureRule | None = None,
                adapt: bool = True) -> float:
    """(2/(2-q)) ln(nnorm_q(f)^q) for normalized f and q > 2."""
    q = float(q)
    if not q > 2:
        raise InvalidArgumentError(f"Renyi-Wehrl index needs q > 2, got {q!r}")
    _check_normalized(state)
    return 2 / (2 - q) * q * math.log(normalized_p_norm(state, q, rule, adapt))


def mixed_wehrl(mixed: MixedState, rule: QuadratureRule | None = None, adapt: bool = True) -> float:
    """-(2j+1) \\int rho ln rho dmu with rho = sum_k |f_k|^2."""
    if not isinstance(mixed, MixedState):
        raise PreconditionError("mixed_wehrl needs a MixedState")
    r = rule_for_state(mixed, rule, adapt)
    return -(mixed.twice_j + 1) * integrate_invariant(r, lambda z: _entropy_integrand(mixed.density(z)))


def lieb_bound(twice_j: int) -> float:
    """Conjectured sharp lower bound 2j/(2j+1), attained by coherent states."""
    return twice_j / (twice_j + 1)


def theorem2_bound(twice_j: int) -> float:
    """Proven lower bound 2j ln(1 + 1/(2j+1))."""
    return twice_j * math.log1p(1 / (twice_j + 1))


def bound_gap(twice_j: int) -> float:
    """lieb_bound - theorem2_bound without cancellation.

    With n = 2j+1 the gap is (n-1)(1/n - log1p(1/n)); for large n the bracket
    is summed from its alternating series.
    """
    n = twice_j + 1
    x = 1 / n
    if x < 1e-3:
        # 1/n - log1p(1/n) = x^2/2 - x^3/3 + x^4/4 - ...
        bracket = sum((-1) ** k * x ** k / k for k in range(2, 10))
    else:
        bracket = x - math.log1p(x)
    return (n - 1) * bracket


def interpolation_bound(twice_j: int, s: float) -> float:
    """Lower bound for ||f||_s^s (plain norm, ||f||_2 = 1) for 1 <= s <= 2.

    s -> ln \\int |f|^s dmu is convex, so with q = 2 + 1/j the value at 2
    lies below the chord through s and q.  The nesting theorem gives
    \\int |f|^q <= 1/(qj+1) and normalization gives \\int |f|^2 = 1/(2j+1),
    hence

        ||f||_s^s >= (2j+1)^{-(q-s)/(q-2)} (qj+1)^{(2-s)/(q-2)}.

    Both sides agree at s = 2, so the left s-derivative of ||f||_s^s there
    is at most that of the bound; multiplying by -2(2j+1) turns this into
    the unconditional entropy bound 2j ln(1 + 1/(2j+1)).
    """
    s = float(s)
    if not 1 <= s <= 2:
        raise InvalidArgumentError(f"need 1 <= s <= 2, got {s!r}")
    j = twice_j / 2
    q = 2 + 1 / j
    return (twice_j + 1) ** (-(q - s) / (q - 2)) * (q * j + 1) ** ((2 - s) / (q - 2))


@dataclass
class EntropyReport:
    twice_j: int
    wehrl: float
    renyi_values: list = field(default_factory=list)
    thm2_bound: float = 0.0
    lieb_bound: float = 0.0
    slack_thm2: float = 0.0
    slack_lieb: float = 0.0

    CSV_FIELDS = ("twice_j", "wehrl", "thm2_bound", "lieb_bound", "slack_thm2", "slack_lieb")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["renyi_values"] = [[float(q), float(v)] for q, v in self.renyi_values]
        return d

    def csv_row(self) -> list:
        return [getattr(self, k) for k in self.CSV_FIELDS]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        w.writerow([repr(v) if isinstance(v, float) else v for v in self.csv_row()])
        return buf.getvalue()


def entropy_report(state: SpinState, rule: QuadratureRule | None = None) -> EntropyReport:
    """Wehrl entropy, Renyi-Wehrl values at q in {2+1/j, 2+2/j, 4} and both bounds."""
    if state.is_zero():
        raise InvalidArgumentError("entropy of the zero state is undefined")
    f = state.normalized()
    r = rule_for_state(f, rule)
    tj = f.twice_j
    qs = sorted({2 + 2 / tj, 2 + 4 / tj, 4.0})
    s = wehrl_entropy(f, r)
    renyi = [(q, renyi_wehrl(f, q, r)) for q in qs]
    t2, lb = theorem2_bound(tj), lieb_bound(tj)
    return EntropyReport(tj, s, renyi, t2, lb, s - t2, s - lb)


def norm_log_derivative_check(state: SpinState, ds: float, rule: QuadratureRule | None = None,
                              adapt: bool = True):
    """Compare s d/ds ||f||_s^s at s = 2 (central difference) with \\int |f|^2 ln|f|^2 dmu.

    Both sides agree exactly for normalized f since d/ds |f|^s = |f|^s ln|f|.
    Returns ``(lhs, rhs)``.
    """
    _check_normalized(state)
    if not 0 < ds <= 1e-3:
        raise InvalidArgumentError(f"need 0 < ds <= 1e-3, got {ds!r}")
    r = rule_for_state(state, rule, adapt)
    logrho = _log_density(state, r.nodes)
    w = r.weights

    def power_integral(s):
        return float(np.sum(w * np.exp(0.5 * s * logrho)))

    lhs = 2 * (power_integral(2 + ds) - power_integral(2 - ds)) / (2 * ds)
    rhs = float(np.sum(w * _entropy_integrand(np.exp(logrho))))
    return lhs, rhs
