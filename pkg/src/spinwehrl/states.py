"""The spin-j Hilbert space F_j in its phase-space (Bargmann-type) realization.

A state is f(z) = (1 + |z|^2)^{-j} P(z) with P(z) = sum_{k=0}^{2j} c_k z^k, and
the inner product is

    <f, g> = (2j + 1) \\int conj(f) g dmu = sum_k conj(c_k) d_k / C(2j, k),

the closed form following from the moments in :func:`spinwehrl.sphere.exact_moment`.
The monomials e_k = sqrt(C(2j, k)) z^k (times the conformal factor) are an
orthonormal basis.

SU(2) acts by

    (T_{alpha,beta} f)(z) = (beta z + conj(alpha))^{2j} / |beta z + conj(alpha)|^{2j}
                            * f((alpha z - conj(beta)) / (beta z + conj(alpha))).

Using 1 + |Mz|^2 = (1 + |z|^2) / |beta z + conj(alpha)|^2 the moduli cancel
against the conformal factor, leaving the holomorphic polynomial

    P'(z) = sum_k c_k (alpha z - conj(beta))^k (beta z + conj(alpha))^{2j-k},

so coefficients transform by binomial convolution and no phase choice is
involved.  With this right action, T_{g1} T_{g2} = T_{g2 @ g1} where ``@``
is the product of the matrices ((alpha, -conj(beta)), (beta, conj(alpha))).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidArgumentError, PreconditionError
from .sphere import SpherePoint, chordal_distance

__all__ = [
    "SpinState",
    "SU2Element",
    "MixedState",
    "RootRotation",
    "make_state",
    "evaluate",
    "kernel",
    "coherent_state",
    "inner_product",
    "apply_su2",
    "husimi",
    "majorana_roots",
    "state_from_roots",
    "rotate_root_to_infinity",
    "basis_state",
    "basis_values",
]

ROOT_MULTIPLICITY_TOL = 1e-7  # chordal spread below which a root cluster is one multiple root
_CLUSTER_SEARCH_RADIUS = 0.05


def _check_twice_j(twice_j) -> int:
    if isinstance(twice_j, bool) or int(twice_j) != twice_j or twice_j < 1:
        raise InvalidArgumentError(f"twice_j must be a positive integer, got {twice_j!r}")
    return int(twice_j)


@dataclass(frozen=True)
class SpinState:
    """Coefficients c_0..c_{2j} of the polynomial part of a state in F_j."""

    twice_j: int
    coeffs: tuple

    def __post_init__(self):
        tj = _check_twice_j(self.twice_j)
        coeffs = tuple(complex(c) for c in self.coeffs)
        if len(coeffs) != tj + 1:
            raise InvalidArgumentError(
                f"twice_j = {tj} needs {tj + 1} coefficients, got {len(coeffs)}")
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coeffs):
            raise InvalidArgumentError("coefficients must be finite")
        object.__setattr__(self, "twice_j", tj)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def j(self) -> float:
        return self.twice_j / 2

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def norm(self) -> float:
        """The Hilbert-space norm ||f||_2 (equal to the normalized 2-norm)."""
        return math.sqrt(max(inner_product(self, self).real, 0.0))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def scaled(self, factor) -> "SpinState":
        return SpinState(self.twice_j, tuple(self.array * complex(factor)))

    def normalized(self) -> "SpinState":
        n = self.norm()
        if n == 0:
            raise InvalidArgumentError("cannot normalize the zero state")
        return self.scaled(1.0 / n)

    def orthonormal_components(self) -> np.ndarray:
        """Components a_k = c_k / sqrt(C(2j, k)) in the basis e_k."""
        return self.array / np.sqrt(_binomials(self.twice_j))

    @classmethod
    def from_components(cls, twice_j: int, components) -> "SpinState":
        tj = _check_twice_j(twice_j)
        comps = np.asarray(components, dtype=complex)
        return cls(tj, tuple(comps * np.sqrt(_binomials(tj))))

    def to_dict(self) -> dict:
        return {"twice_j": self.twice_j, "coeffs": [[c.real, c.imag] for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data: dict) -> "SpinState":
        try:
            coeffs = [complex(re, im) for re, im in data["coeffs"]]
            return cls(int(data["twice_j"]), tuple(coeffs))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"malformed state object: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SpinState":
        return cls.from_dict(json.loads(text))


def _binomials(twice_j: int) -> np.ndarray:
    return np.array([math.comb(twice_j, k) for k in range(twice_j + 1)], dtype=float)


def make_state(twice_j: int, coeffs: Sequence) -> SpinState:
    """Build a state from its polynomial coefficients (no normalization)."""
    return SpinState(twice_j, tuple(coeffs))


def basis_state(twice_j: int, k: int) -> SpinState:
    """The orthonormal basis vector e_k = sqrt(C(2j,k)) z^k (1+|z|^2)^{-j}."""
    c = [0j] * (twice_j + 1)
    c[k] = math.sqrt(math.comb(twice_j, k))
    return SpinState(twice_j, tuple(c))


def basis_values(twice_j: int, z) -> np.ndarray:
    """Values e_k(z) of the orthonormal basis at an array of finite points.

    Returns an array of shape (2j+1, len(z)), so that the values of the
    state with orthonormal components ``a`` are ``a @ basis_values(...)``.
    Moduli are formed in the log domain, so large |z| does not overflow.
    """
    tj = _check_twice_j(twice_j)
    z = np.asarray(z, dtype=complex).ravel()
    r = np.abs(z)
    k = np.arange(tj + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        kt = np.where(k == 0, 0.0, k * logr[None, :])
    log_binom = 0.5 * np.log(_binomials(tj))[:, None]
    phase = np.where(r > 0, z / np.where(r > 0, r, 1.0), 1.0)
    return np.exp(log_binom + kt - (tj / 2) * np.log1p(r * r)[None, :]) * phase[None, :] ** k


def _evaluate_array(coeffs: np.ndarray, twice_j: int, z: np.ndarray) -> np.ndarray:
    # split at |z| = 1 so neither branch forms large powers of |z|
    z = np.asarray(z, dtype=complex)
    t = np.abs(z) ** 2
    out = np.empty(z.shape, dtype=complex)
    inner = t <= 1.0
    zi = z[inner]
    out[inner] = np.polyval(coeffs[::-1], zi) / (1.0 + t[inner]) ** (twice_j / 2)
    zo, to = z[~inner], t[~inner]
    phase = (zo / np.sqrt(to)) ** twice_j
    out[~inner] = phase * (to / (1.0 + to)) ** (twice_j / 2) * np.polyval(coeffs, 1.0 / zo)
    return out


def evaluate(state: SpinState, point):
    """Value f(z) of a state.

    ``point`` may be a :class:`SpherePoint` (the point at infinity gives
    the leading coefficient c_{2j}), a complex number, or an array of
    finite complex numbers (vectorized).
    """
    if isinstance(point, SpherePoint):
        if point.infinite:
            return state.coeffs[-1]
        return complex(_evaluate_array(state.array, state.twice_j, np.array([point.z]))[0])
    z = np.asarray(point, dtype=complex)
    if z.ndim == 0:
        if np.isinf(z):
            return state.coeffs[-1]
        return complex(_evaluate_array(state.array, state.twice_j, z.reshape(1))[0])
    return _evaluate_array(state.array, state.twice_j, z)


def husimi(state: SpinState, point):
    """Phase-space density |f(z)|^2 (vectorized like :func:`evaluate`)."""
    v = evaluate(state, point)
    return np.abs(v) ** 2 if isinstance(v, np.ndarray) else abs(v) ** 2


def kernel(twice_j: int, z, w) -> complex:
    """Reproducing kernel K(z, w) = (1 + z conj(w))^{2j} (1+|z|^2)^{-j} (1+|w|^2)^{-j}."""
    tj = _check_twice_j(twice_j)
    z, w = SpherePoint.coerce(z), SpherePoint.coerce(w)
    if z.infinite and w.infinite:
        return 1.0 + 0j
    if w.infinite:
        return complex(z.z ** tj / (1 + abs(z.z) ** 2) ** (tj / 2))
    if z.infinite:
        return complex(w.z.conjugate() ** tj / (1 + abs(w.z) ** 2) ** (tj / 2))
    num = (1 + z.z * w.z.conjugate()) ** tj
    return complex(num / ((1 + abs(z.z) ** 2) * (1 + abs(w.z) ** 2)) ** (tj / 2))


def coherent_state(twice_j: int, w) -> SpinState:
    """The coherent vector K(., w): c_k = C(2j,k) conj(w)^k (1+|w|^2)^{-j}."""
    tj = _check_twice_j(twice_j)
    w = SpherePoint.coerce(w)
    if w.infinite:
        return SpinState(tj, tuple([0j] * tj + [1.0 + 0j]))
    wc = w.z.conjugate()
    scale = (1 + abs(w.z) ** 2) ** (-tj / 2)
    return SpinState(tj, tuple(math.comb(tj, k) * wc ** k * scale for k in range(tj + 1)))


def inner_product(f: SpinState, g: SpinState) -> complex:
    """Exact <f, g>, conjugate linear in ``f``."""
    if f.twice_j != g.twice_j:
        raise InvalidArgumentError(f"states live in different spaces ({f.twice_j} vs {g.twice_j})")
    return complex(np.sum(np.conj(f.array) * g.array / _binomials(f.twice_j)))


@dataclass(frozen=True)
class SU2Element:
    """The group element with matrix ((alpha, -conj(beta)), (beta, conj(alpha)))."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-12:
            raise InvalidArgumentError(f"|alpha|^2 + |beta|^2 = {abs(a)**2 + abs(b)**2!r} != 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def identity(cls) -> "SU2Element":
        return cls(1.0, 0.0)

    @classmethod
    def from_unnormalized(cls, alpha, beta) -> "SU2Element":
        s = math.hypot(abs(alpha), abs(beta))
        return cls(complex(alpha) / s, complex(beta) / s)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "SU2Element":
        v = rng.standard_normal(4)
        return cls.from_unnormalized(complex(v[0], v[1]), complex(v[2], v[3]))

    @classmethod
    def sending_to_infinity(cls, point) -> "SU2Element":
        """Element whose action moves a zero of f at ``point`` to infinity.

        Its Moebius map sends infinity to ``point``.
        """
        p = SpherePoint.coerce(point)
        if p.infinite:
            return cls.identity()
        s = math.sqrt(1 + abs(p.z) ** 2)
        return cls(p.z / s, 1 / s)

    @classmethod
    def _moving_origin_to(cls, point: SpherePoint) -> "SU2Element":
        # Moebius map sends 0 to `point`
        if point.infinite:
            return cls(0.0, 1.0)
        s = math.sqrt(1 + abs(point.z) ** 2)
        return cls(1 / s, -point.z.conjugate() / s)

    @classmethod
    def transporting(cls, source, target) -> "SU2Element":
        """Element g with T_g K(., source) collinear to K(., target)."""
        src = cls._moving_origin_to(SpherePoint.coerce(source))
        tgt = cls._moving_origin_to(SpherePoint.coerce(target))
        return src @ tgt.inverse()

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.alpha, self.beta
        return np.array([[a, -b.conjugate()], [b, a.conjugate()]])

    def __matmul__(self, other: "SU2Element") -> "SU2Element":
        m = self.matrix @ other.matrix
        return SU2Element.from_unnormalized(m[0, 0], m[1, 0])

    def inverse(self) -> "SU2Element":
        return SU2Element(self.alpha.conjugate(), -self.beta)

    def mobius(self, point):
        """Image of a point under z -> (alpha z - conj(beta)) / (beta z + conj(alpha))."""
        a, b = self.alpha, self.beta
        if isinstance(point, SpherePoint):
            if point.infinite:
                return SpherePoint.infinity() if b == 0 else SpherePoint(a / b)
            den = b * point.z + a.conjugate()
            return SpherePoint.infinity() if den == 0 else SpherePoint((a * point.z - b.conjugate()) / den)
        return (a * point - b.conjugate()) / (b * point + a.conjugate())


def apply_su2(g: SU2Element, f: SpinState) -> SpinState:
    """The state T_g f, computed by binomial convolution of the coefficients."""
    tj = f.twice_j
    a, b = g.alpha, g.beta
    num = np.array([-b.conjugate(), a])      # alpha z - conj(beta)
    den = np.array([a.conjugate(), b])       # beta z + conj(alpha)
    num_pows = [np.array([1.0 + 0j])]
    den_pows = [np.array([1.0 + 0j])]
    for _ in range(tj):
        num_pows.append(npoly.polymul(num_pows[-1], num))
        den_pows.append(npoly.polymul(den_pows[-1], den))
    out = np.zeros(tj + 1, dtype=complex)
    for k, c in enumerate(f.coeffs):
        if c == 0:
            continue
        term = npoly.polymul(num_pows[k], den_pows[tj - k])
        out[: term.size] += c * term
    return SpinState(tj, tuple(out))


def _degree(coeffs: np.ndarray) -> int:
    nz = np.flatnonzero(coeffs)
    return int(nz[-1]) if nz.size else -1


def _raw_roots(coeffs: np.ndarray) -> list:
    # companion-matrix eigenvalues; LAPACK balances the companion matrix first
    deg = _degree(coeffs)
    finite = np.roots(coeffs[: deg + 1][::-1]) if deg > 0 else np.array([], dtype=complex)
    pts = [SpherePoint(complex(r)) for r in finite]
    pts += [SpherePoint.infinity()] * (coeffs.size - 1 - deg)
    return pts


def _single_linkage(points: list, radius: float) -> list:
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for k in range(i + 1, n):
            if chordal_distance(points[i], points[k]) <= radius:
                parent[find(i)] = find(k)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _is_multiple_root(coeffs: np.ndarray, center: complex, m: int) -> bool:
    # Taylor coefficients of P at `center`; an m-fold root needs a_0..a_{m-1} to be
    # negligible against a_m up to the spread tolerance, or lost in rounding.
    poly = npoly.Polynomial(coeffs)
    eps = np.finfo(float).eps
    absc = np.abs(coeffs)
    radius = ROOT_MULTIPLICITY_TOL * (1 + abs(center) ** 2) / 2
    a = []
    bounds = []
    for i in range(m + 1):
        a.append(abs(poly.deriv(i)(center)) / math.factorial(i) if i else abs(poly(center)))
        k = np.arange(i, coeffs.size)
        mags = absc[i:] * np.array([math.comb(int(kk), i) for kk in k]) * abs(center) ** (k - i)
        bounds.append(8 * coeffs.size * eps * float(np.sum(mags)))
    if a[m] <= bounds[m]:
        return False
    return all(a[i] <= bounds[i] + math.comb(m, i) * radius ** (m - i) * a[m] for i in range(m))


def _refine_clusters(coeffs: np.ndarray, raw: list) -> list:
    out = []
    for group in _single_linkage(raw, _CLUSTER_SEARCH_RADIUS):
        members = [raw[i] for i in group]
        m = len(members)
        if m == 1:
            out.extend(members)
            continue
        # work in the chart (z or 1/z) that keeps the cluster bounded
        far = sum(p.infinite or abs(p.z) > 1 for p in members) * 2 > m
        if far:
            chart = [0j if p.infinite else 1 / p.z for p in members]
            chart_coeffs = coeffs[::-1]
        else:
            chart = [p.z for p in members]
            chart_coeffs = coeffs
        center = complex(np.mean(chart))
        if _is_multiple_root(chart_coeffs, center, m):
            if far:
                rep = SpherePoint.infinity() if abs(center) < 1e-300 else SpherePoint(1 / center)
            else:
                rep = SpherePoint(center)
            out.extend([rep] * m)
        else:
            out.extend(members)
    return out


def majorana_roots(state: SpinState) -> list:
    """The 2j Majorana points of a state (roots of P, infinity for missing degree).

    Roots are companion-matrix eigenvalues.  Eigenvalues that sit in a tight
    cluster are tested for being one multiple root (spread below 1e-7 in
    chordal distance, allowing for rounding in the Taylor coefficients);
    confirmed clusters are replaced by their mean, repeated.
    """
    if state.is_zero():
        raise InvalidArgumentError("the zero state has no Majorana representation")
    c = state.array
    return _refine_clusters(c, _raw_roots(c))


def state_from_roots(twice_j: int, roots) -> SpinState:
    """Normalized state whose polynomial vanishes at ``roots`` (with multiplicity).

    Each finite root r contributes the factor (z - r) / sqrt(1 + |r|^2), which
    tends to a constant as r -> infinity; infinite roots contribute 1.
    """
    tj = _check_twice_j(twice_j)
    pts = [SpherePoint.coerce(r) for r in roots]
    if len(pts) != tj:
        raise InvalidArgumentError(f"need exactly {tj} roots, got {len(pts)}")
    poly = np.array([1.0 + 0j])
    for p in pts:
        if p.infinite:
            continue
        s = math.sqrt(1 + abs(p.z) ** 2)
        poly = npoly.polymul(poly, np.array([-p.z / s, 1 / s]))
    coeffs = np.zeros(tj + 1, dtype=complex)
    coeffs[: poly.size] = poly
    return SpinState(tj, tuple(coeffs)).normalized()


class RootRotation(NamedTuple):
    state: SpinState
    element: SU2Element
    already_vanishing: bool


def rotate_root_to_infinity(state: SpinState) -> RootRotation:
    """Rotate the state so that it vanishes at infinity.

    If c_{2j} is already zero (which includes all states whose roots are all
    at infinity), the state is returned with the identity and
    ``already_vanishing=True``.  Otherwise the finite root of largest modulus
    is moved to infinity; the rotated leading coefficient, zero in exact
    arithmetic, is set to exactly zero.
    """
    if state.is_zero():
        raise InvalidArgumentError("the zero state has no roots")
    if state.coeffs[-1] == 0:
        return RootRotation(state, SU2Element.identity(), True)
    roots = [p for p in _raw_roots(state.array) if not p.infinite]
    target = max(roots, key=lambda p: abs(p.z))
    g = SU2Element.sending_to_infinity(target)
    rotated = apply_su2(g, state)
    coeffs = list(rotated.coeffs)
    coeffs[-1] = 0j
    return RootRotation(SpinState(state.twice_j, tuple(coeffs)), g, False)


@dataclass(frozen=True)
class MixedState:
    """Orthogonal family f_k with sum_k ||f_k||^2 = 1, density sum_k |f_k|^2."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise PreconditionError("a mixed state needs at least one member")
        tj = members[0].twice_j
        if any(m.twice_j != tj for m in members):
            raise PreconditionError("members must share twice_j")
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                ov = abs(inner_product(members[a], members[b]))
                if ov > 1e-10:
                    raise PreconditionError(f"members {a} and {b} are not orthogonal (|<f,g>| = {ov:.3e})")
        total = sum(m.norm() ** 2 for m in members)
        if abs(total - 1) > 1e-10:
            raise PreconditionError(f"sum of squared norms is {total!r}, expected 1")
        object.__setattr__(self, "members", members)

    @property
    def twice_j(self) -> int:
        return self.members[0].twice_j

    def density(self, z) -> np.ndarray:
        return sum(husimi(m, z) for m in self.members)
