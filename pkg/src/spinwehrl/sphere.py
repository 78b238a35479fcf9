"""Integration on the Riemann sphere in stereographic coordinates.

All integrals are taken against the rotation-invariant probability measure

    dmu(z) = d^2z / (pi (1 + |z|^2)^2),

or against the flat measure d^2z / pi.  A point z = tan(theta/2) e^{i phi}
corresponds to polar angle theta (z = 0 is theta = 0, infinity is theta = pi).

Quadrature rules are products of a Gauss-Legendre rule in the polar
direction and a uniform rule in azimuth.  Functions with isolated
singularities at known points (zeros of a phase-space density, say) are
handled by :func:`adapt_rule`, which recentres a copy of the rule on each
singular point and blends the copies with a smooth partition of unity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import betaln, roots_legendre

from .errors import InvalidArgumentError, NumericDomainError

__all__ = [
    "SpherePoint",
    "QuadratureRule",
    "build_quadrature",
    "default_rule",
    "adapt_rule",
    "integrate_invariant",
    "integrate_flat",
    "exact_moment",
    "chordal_distance",
    "mobius",
    "unit_vector",
]

_EXACT_MOMENT_LIMIT = 4096
_GRADING = 1.5


@dataclass(frozen=True)
class SpherePoint:
    """A point of the Riemann sphere C u {inf}.

    Either a finite stereographic coordinate ``z`` or the point at infinity
    (``infinite=True``, in which case ``z`` is ignored and stored as 0).
    """

    z: complex = 0j
    infinite: bool = False

    def __post_init__(self):
        z = complex(self.z)
        if self.infinite:
            z = 0j
        elif not cmath.isfinite(z):
            raise InvalidArgumentError(
                "finite SpherePoint needs a finite coordinate; use SpherePoint.infinity()")
        object.__setattr__(self, "z", z)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(0j, True)

    @classmethod
    def coerce(cls, value) -> "SpherePoint":
        """Accept a SpherePoint, a number, or an infinite number."""
        if isinstance(value, SpherePoint):
            return value
        value = complex(value)
        if cmath.isinf(value):
            return cls.infinity()
        return cls(value)

    def antipode(self) -> "SpherePoint":
        if self.infinite:
            return SpherePoint(0j)
        if self.z == 0:
            return SpherePoint.infinity()
        with np.errstate(over="ignore"):
            w = -1.0 / self.z.conjugate()
        return SpherePoint(w) if cmath.isfinite(w) else SpherePoint.infinity()

    def to_complex(self) -> complex:
        return complex(math.inf, 0.0) if self.infinite else self.z

    def __repr__(self):
        return "SpherePoint(inf)" if self.infinite else f"SpherePoint({self.z!r})"


def unit_vector(point) -> np.ndarray:
    """Cartesian unit vector of a point (z = 0 is the north pole (0, 0, 1))."""
    p = SpherePoint.coerce(point)
    if p.infinite:
        return np.array([0.0, 0.0, -1.0])
    if abs(p.z) <= 1:
        t = abs(p.z) ** 2
        return np.array([2 * p.z.real, 2 * p.z.imag, 1 - t]) / (1 + t)
    # through w = 1/conj(z) so that huge coordinates do not overflow
    w = 1 / p.z.conjugate()
    s = abs(w) ** 2
    return np.array([2 * w.real, 2 * w.imag, s - 1]) / (1 + s)


def chordal_distance(a, b) -> float:
    """Euclidean distance in R^3 between two points on the unit sphere."""
    a, b = SpherePoint.coerce(a), SpherePoint.coerce(b)
    if a.infinite and b.infinite:
        return 0.0
    if a.infinite or b.infinite:
        z = b.z if a.infinite else a.z
        return 2.0 / math.hypot(1, abs(z))
    return 2.0 * abs(a.z - b.z) / (math.hypot(1, abs(a.z)) * math.hypot(1, abs(b.z)))


def mobius(alpha: complex, beta: complex, z):
    """Apply z -> (alpha z - conj(beta)) / (beta z + conj(alpha))."""
    return (alpha * z - np.conj(beta)) / (beta * z + np.conj(alpha))


def _rotation_from_infinity(point: SpherePoint):
    # (alpha, beta) of the rotation whose Moebius map sends infinity to `point`
    if point.infinite:
        return 1.0 + 0j, 0j
    s = math.sqrt(1 + abs(point.z) ** 2)
    return point.z / s, 1.0 / s + 0j


def _inverse_image(alpha, beta, point: SpherePoint) -> SpherePoint:
    # preimage of `point` under mobius(alpha, beta, .): w -> (conj(a) w + conj(b)) / (a - b w)
    if point.infinite:
        return SpherePoint.infinity() if beta == 0 else SpherePoint(-np.conj(alpha) / beta)
    den = alpha - beta * point.z
    if den == 0:
        return SpherePoint.infinity()
    return SpherePoint((np.conj(alpha) * point.z + np.conj(beta)) / den)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights for integration against ``dmu``.

    ``nodes`` are finite stereographic coordinates (a complex array); an
    integrand is a vectorized callable mapping that array to values.
    ``centers`` is empty for a plain product rule and lists the singular
    points a rule produced by :func:`adapt_rule` was built around.
    """

    nodes: np.ndarray
    weights: np.ndarray
    n_polar: int
    n_azimuth: int
    polar: str = "graded"
    centers: tuple = field(default=())

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=complex)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise InvalidArgumentError("nodes and weights must be 1-d arrays of equal length")
        if not np.all(weights > 0):
            raise InvalidArgumentError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    @property
    def shape(self):
        return (self.n_polar, self.n_azimuth)


def _polar_rule(n_polar: int, polar: str):
    # returns polar angles theta_i and weights for \int_0^pi g sin(theta) dtheta / 2
    x, w = roots_legendre(n_polar)
    if polar == "cos":
        return np.arccos(x)[::-1], (w / 2)[::-1]
    s, ws = (x + 1) / 2, w / 2
    if polar == "angle":
        theta, dtheta = np.pi * s, np.full_like(s, np.pi)
    elif polar == "graded":
        # theta = pi (1 - (1-s)^g) clusters nodes at the south pole theta = pi, where
        # adapt_rule places the singular point of each copy
        theta = np.pi * (1 - (1 - s) ** _GRADING)
        dtheta = np.pi * _GRADING * (1 - s) ** (_GRADING - 1)
    else:
        raise InvalidArgumentError(f"unknown polar variable {polar!r}")
    wt = ws * dtheta * np.sin(theta) / 2
    # the mass of a smooth-in-theta rule is exact only up to spectral error
    return theta, wt / wt.sum()


def build_quadrature(n_polar: int, n_azimuth: int, polar: str = "graded") -> QuadratureRule:
    """Product rule on the sphere for the invariant probability measure.

    Parameters
    ----------
    n_polar, n_azimuth : int
        Number of polar and azimuthal nodes (at least 2 and 4).
    polar : {"graded", "angle", "cos"}
        Variable carrying the Gauss-Legendre rule.  ``"cos"`` is the classic
        rule in x = cos(theta), exact for polynomials in x of degree
        < 2 n_polar.  ``"angle"`` places the Gauss nodes in theta itself and
        ``"graded"`` (default) in a variable s with
        theta = pi (1 - (1-s)^{3/2}).  Both integrate power-type
        singularities sitting at the south pole far more accurately than the
        x rule, which is what :func:`adapt_rule` relies on.

    Node k of azimuth is phi_k = 2 pi k / n_azimuth and z = tan(theta/2) e^{i phi}.
    """
    if int(n_polar) != n_polar or int(n_azimuth) != n_azimuth:
        raise InvalidArgumentError("quadrature resolutions must be integers")
    n_polar, n_azimuth = int(n_polar), int(n_azimuth)
    if n_polar < 2 or n_azimuth < 4:
        raise InvalidArgumentError(
            f"need n_polar >= 2 and n_azimuth >= 4, got ({n_polar}, {n_azimuth})")
    theta, wt = _polar_rule(n_polar, polar)
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    radius = np.tan(theta / 2)
    nodes = (radius[:, None] * np.exp(1j * phi)[None, :]).ravel()
    weights = np.repeat(wt / n_azimuth, n_azimuth)
    return QuadratureRule(nodes, weights, n_polar, n_azimuth, polar)


@lru_cache(maxsize=16)
def default_rule(n_polar: int = 64, n_azimuth: int = 128, polar: str = "graded") -> QuadratureRule:
    """Cached :func:`build_quadrature`; rules are immutable so sharing is safe."""
    return build_quadrature(n_polar, n_azimuth, polar)


def _cluster_points(points, radius):
    reps = []
    for p in points:
        if all(chordal_distance(p, q) > radius for q in reps):
            reps.append(p)
    return reps


def _closeness(z, c: SpherePoint):
    # D(z, c) = |z - c|^2 / ((1+|z|^2)(1+|c|^2)), a quarter of the squared chordal distance
    t = np.abs(z) ** 2
    if c.infinite:
        return 1.0 / (1.0 + t)
    return np.abs(z - c.z) ** 2 / ((1.0 + t) * (1.0 + abs(c.z) ** 2))


def adapt_rule(rule: QuadratureRule, centers, sharpness: int = 2,
               merge_distance: float = 1e-9) -> QuadratureRule:
    """Rebuild ``rule`` around a set of singular points.

    For every center c a rotated copy of the rule is placed with its south
    pole (theta = pi) on c; a copy contributes with the partition weight

        omega_c(z) = 1 / sum_l (D(z, c) / D(z, c_l))^sharpness,

    D being the quarter squared chordal distance.  The omega_c sum to one,
    equal one at c and vanish to order 2*sharpness at the other centers, so
    each copy only sees a singularity at its own pole, where the graded
    polar variable resolves it.  Since dmu is rotation invariant the result
    is again a rule for dmu.  Centers closer than ``merge_distance`` are
    merged.
    """
    if rule.centers:
        raise InvalidArgumentError("rule is already adapted")
    pts = _cluster_points([SpherePoint.coerce(c) for c in centers], merge_distance)
    if not pts:
        return rule
    z = rule.nodes
    all_nodes, all_weights = [], []
    for k, c in enumerate(pts):
        alpha, beta = _rotation_from_infinity(c)
        own = 1.0 / (1.0 + np.abs(z) ** 2)
        acc = np.ones_like(own)
        for l, other in enumerate(pts):
            if l != k:
                pre = _inverse_image(alpha, beta, other)
                acc += (own / _closeness(z, pre)) ** sharpness
        w = rule.weights / acc
        keep = w > 0
        all_nodes.append(mobius(alpha, beta, z[keep]))
        all_weights.append(w[keep])
    return QuadratureRule(np.concatenate(all_nodes), np.concatenate(all_weights),
                          rule.n_polar, rule.n_azimuth, rule.polar, tuple(pts))


def _weighted_sum(rule: QuadratureRule, values):
    values = np.asarray(values)
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        z = complex(rule.nodes[i])
        raise NumericDomainError(f"integrand not finite at node {i} (z = {z})", index=i, point=z)
    # numpy reduces contiguous arrays pairwise, so the result is bit-reproducible
    return np.sum(rule.weights * values)


def integrate_invariant(rule: QuadratureRule, g):
    """Approximate the integral of ``g`` against the invariant measure ``dmu``.

    ``g`` is vectorized: it receives the complex array of nodes.
    Returns a Python complex if ``g`` is complex valued, else a float.
    """
    total = _weighted_sum(rule, g(rule.nodes))
    return complex(total) if np.iscomplexobj(total) else float(total)


def integrate_flat(rule: QuadratureRule, g):
    """Approximate the integral of real ``g`` against the flat measure d^2z / pi."""
    z = rule.nodes
    conf = (1.0 + np.abs(z) ** 2) ** 2
    return float(np.real(_weighted_sum(rule, conf * np.asarray(g(z)))))


def exact_moment(k: int, m: int):
    """Integral of |z|^{2k} / (1 + |z|^2)^m against ``dmu``.

    Equal to k! (m-k)! / (m+1)!, returned as a :class:`fractions.Fraction`
    for m <= 4096 and as a float (log-Beta evaluation) beyond.
    """
    if int(k) != k or int(m) != m or k < 0 or m < 0:
        raise InvalidArgumentError("moment indices must be non-negative integers")
    k, m = int(k), int(m)
    if k > m:
        raise InvalidArgumentError(f"moment ({k}, {m}) diverges: need k <= m")
    if m <= _EXACT_MOMENT_LIMIT:
        return Fraction(math.factorial(k) * math.factorial(m - k), math.factorial(m + 1))
    return math.exp(float(betaln(k + 1, m - k + 1)))
