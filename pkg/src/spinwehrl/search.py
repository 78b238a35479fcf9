"""Multistart local search over normalized states.

States are handled through their components ``a`` in the orthonormal basis
e_k, so the normalized states form the unit sphere of C^{2j+1} and the
objectives below are constant along the global phase.  Each local search is
a Riemannian gradient descent on that sphere:

* the gradient in the real coordinates (Re a, Im a) is analytic for the
  entropy and a fourth-order central finite difference for the norm ratio,
  projected onto the tangent space with the radial and phase directions
  removed;
* steps use the Barzilai-Borwein length with Armijo backtracking, so the
  objective decreases monotonically;
* once a step improves the objective by less than ``tolerance`` (or the
  Armijo decrease is below rounding) the search switches to polishing:
  steps are accepted when they reduce the projected gradient norm without
  raising the objective beyond rounding.  It stops when no such step exists.
  ``converged`` reports whether the final gradient norm is below
  ``gradient_tolerance``.

The objective is very flat near coherent states (S - S_min grows like the
root spread to the power 4j), so it is the gradient, not the objective
value, that drives the Majorana points of a minimizer together.

All quadrature for one iterate uses a single rule adapted to the iterate's
Majorana points; a finite-difference stencil is evaluated as one batched
matrix product against the basis values on that rule.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import ExponentPair, norm_profile, rule_for_state
from .errors import InvalidArgumentError
from .sphere import QuadratureRule, SpherePoint, chordal_distance, default_rule, unit_vector
from .states import (SpinState, SU2Element, apply_su2, basis_values, coherent_state,
                     majorana_roots, state_from_roots)

__all__ = [
    "SearchOptions",
    "SearchResult",
    "ScanRow",
    "ScanReport",
    "default_num_starts",
    "random_state",
    "minimize_wehrl",
    "maximize_norm_ratio",
    "monotonicity_scan",
]

PARAMETRIZATIONS = ("coefficients", "majorana_roots")


def default_num_starts(twice_j: int) -> int:
    """50 starts up to j = 2, then proportional to the real dimension 4j."""
    return 50 if twice_j <= 4 else math.ceil(25 * twice_j / 2)


@dataclass(frozen=True)
class SearchOptions:
    seed: int = 0
    num_starts: int | None = None
    max_iters: int = 400
    gradient_step: float = 1e-5
    tolerance: float = 1e-13
    gradient_tolerance: float = 1e-8
    parametrization: str = "coefficients"
    switch_distance: float = 0.05

    def __post_init__(self):
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
        if self.num_starts is not None and (int(self.num_starts) != self.num_starts or self.num_starts < 1):
            raise InvalidArgumentError("num_starts must be a positive integer")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be a positive integer")
        for name in ("gradient_step", "tolerance", "gradient_tolerance", "switch_distance"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be a positive real, got {v!r}")
        if self.parametrization not in PARAMETRIZATIONS:
            raise InvalidArgumentError(
                f"parametrization must be one of {PARAMETRIZATIONS}, got {self.parametrization!r}")

    def starts_for(self, twice_j: int) -> int:
        return self.num_starts if self.num_starts is not None else default_num_starts(twice_j)


@dataclass
class SearchResult:
    """Outcome of a multistart search.

    ``iterations_used`` is the total over all starts; ``history`` holds the
    accepted objective values of the winning start.
    """

    best_state: SpinState
    best_value: float
    per_start_values: list
    converged: bool
    iterations_used: int
    best_start: int = 0
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_state": self.best_state.to_dict(),
            "best_value": self.best_value,
            "per_start_values": list(self.per_start_values),
            "converged": self.converged,
            "iterations_used": self.iterations_used,
            "best_start": self.best_start,
        }


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_state(twice_j: int, seed) -> SpinState:
    """Unitarily invariant random normalized state.

    Components in the orthonormal basis are independent standard complex
    Gaussians, then normalized.  ``seed`` is anything accepted by
    :func:`numpy.random.default_rng` (an int, a sequence of ints) or a
    Generator.
    """
    rng = _rng(seed)
    n = int(twice_j) + 1
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return SpinState.from_components(twice_j, a / np.linalg.norm(a))


# --- objectives on batches of component vectors --------------------------------------

def _densities(A: np.ndarray, E: np.ndarray) -> np.ndarray:
    # rows of A are component vectors; returns |f|^2 / ||f||^2 on the nodes
    vals = A @ E
    norms = np.sum(np.abs(A) ** 2, axis=1, keepdims=True)
    return (vals.real ** 2 + vals.imag ** 2) / norms


def _entropy_objective(twice_j: int):
    def objective(A, E, w):
        rho = _densities(A, E)
        safe = np.where(rho < 1e-300, 1.0, rho)
        return -(twice_j + 1) * ((rho * np.log(safe)) @ w)
    return objective


def _entropy_gradient(twice_j: int):
    # 2 d/d(conj a) of the entropy objective: with v = a E, N = |a|^2 and
    # rho = |v|^2 / N, d rho / d conj(a_k) = conj(E_k) v / N - rho a_k / N.
    # The second term points along a and is removed by the tangent projection.
    def gradient(a, E, w):
        v = a @ E
        norm2 = float(np.vdot(a, a).real)
        rho = (v.real ** 2 + v.imag ** 2) / norm2
        tiny = rho < 1e-300
        c = -(twice_j + 1) * w * (np.log(np.where(tiny, 1.0, rho)) + 1)
        c = np.where(tiny, 0.0, c)
        return (2 / norm2) * (E.conj() @ (c * v))
    return gradient


def _negative_ratio_objective(twice_j: int, p: float, q: float):
    j = twice_j / 2

    def objective(A, E, w):
        rho = _densities(A, E)
        nq = ((q * j + 1) * (rho ** (q / 2) @ w)) ** (1 / q)
        np_ = ((p * j + 1) * (rho ** (p / 2) @ w)) ** (1 / p)
        return -(nq / np_)
    return objective


class _Problem:
    """An objective bound to the quadrature rule adapted to one iterate."""

    def __init__(self, twice_j, objective, base_rule, gradient=None):
        self.twice_j = twice_j
        self.objective = objective
        self.gradient = gradient
        self.base_rule = base_rule
        self.E = None
        self.w = None

    def recentre(self, a: np.ndarray):
        rule = rule_for_state(SpinState.from_components(self.twice_j, a), self.base_rule)
        self.E = basis_values(self.twice_j, rule.nodes)
        self.w = rule.weights

    def values(self, A: np.ndarray) -> np.ndarray:
        return self.objective(np.atleast_2d(A), self.E, self.w)

    def value(self, a: np.ndarray) -> float:
        return float(self.values(a)[0])


def _real_inner(u, v) -> float:
    return float(np.real(np.vdot(u, v)))


def _difference_gradient(problem: _Problem, a: np.ndarray, h: float) -> np.ndarray:
    # fourth-order central differences in (Re a, Im a), one batched evaluation
    n = a.size
    shifts = np.concatenate([np.eye(n), 1j * np.eye(n)]) * h
    vals = problem.values(np.concatenate([a + shifts, a - shifts, a + 2 * shifts, a - 2 * shifts]))
    m = 2 * n
    d = (8 * (vals[:m] - vals[m:2 * m]) - (vals[2 * m:3 * m] - vals[3 * m:])) / (12 * h)
    return d[:n] + 1j * d[n:]


def _coefficient_gradient(problem: _Problem, a: np.ndarray, h: float) -> np.ndarray:
    """Tangent gradient (d/d Re a + i d/d Im a, projected) of the objective at a."""
    if problem.gradient is not None:
        g = problem.gradient(a, problem.E, problem.w)
    else:
        g = _difference_gradient(problem, a, h)
    # tangent projection: drop the radial and the phase direction
    g = g - _real_inner(a, g) * a
    ia = 1j * a
    return g - _real_inner(ia, g) * ia


def _normalize(a):
    return a / np.linalg.norm(a)


@dataclass
class _StartOutcome:
    components: np.ndarray
    value: float
    converged: bool
    iterations: int
    history: list


def _descend_coefficients(problem: _Problem, a: np.ndarray, opts: SearchOptions,
                          max_iters: int, history: list) -> _StartOutcome:
    a = _normalize(a)
    problem.recentre(a)
    f = problem.value(a)
    history.append(f)
    g = _coefficient_gradient(problem, a, opts.gradient_step)
    slack = 64 * np.finfo(float).eps * max(abs(f), 1.0)
    step = 1.0
    polishing = False
    it = 0
    while it < max_iters:
        it += 1
        gnorm = np.linalg.norm(g)
        t = step
        accepted = False
        for _ in range(40):
            trial = _normalize(a - t * g)
            ft = problem.value(trial)
            if not polishing and ft <= f - 1e-4 * t * gnorm ** 2:
                accepted = True
                break
            if polishing and ft <= f + slack:
                g_trial = _coefficient_gradient(problem, trial, opts.gradient_step)
                if np.linalg.norm(g_trial) < gnorm:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if polishing:
                break
            # decreases of order |g|^2 are now below rounding: continue on the gradient norm
            polishing = True
            continue
        improvement = f - ft
        problem.recentre(trial)
        ft = problem.value(trial)
        g_new = _coefficient_gradient(problem, trial, opts.gradient_step)
        s, y = trial - a, g_new - g
        sy = _real_inner(s, y)
        step = float(np.clip(_real_inner(s, s) / sy, 1e-6, 1e3)) if sy > 0 else min(2 * t, 1e3)
        # recentring the rule may shift the value by quadrature noise; record a monotone sequence
        f = min(ft, f)
        a, g = trial, g_new
        history.append(f)
        if not polishing and improvement < opts.tolerance:
            polishing = True
    converged = bool(np.linalg.norm(g) <= opts.gradient_tolerance)
    return _StartOutcome(a, f, converged, it, history)


def _roots_to_components(twice_j, roots: np.ndarray) -> np.ndarray:
    return state_from_roots(twice_j, list(roots)).orthonormal_components()


def _centred_roots(state: SpinState) -> np.ndarray:
    # rotate so that the mean root direction sits at z = 0; entropy and norms are invariant
    roots = majorana_roots(state)
    m = np.sum([unit_vector(r) for r in roots], axis=0)
    if np.linalg.norm(m) < 1e-8:
        m = unit_vector(roots[0])
    m = m / np.linalg.norm(m)
    if m[2] <= -1 + 1e-15:
        target = SpherePoint.infinity()
    else:
        target = SpherePoint(complex(m[0], m[1]) / (1 + m[2]))
    g = SU2Element.transporting(target, 0)
    rotated = apply_su2(g, state)
    pts = majorana_roots(rotated)
    if any(p.infinite for p in pts):
        return None
    return np.array([p.z for p in pts])


def _min_root_distance(roots) -> float:
    pts = [SpherePoint(complex(r)) for r in roots]
    d = [chordal_distance(x, y) for i, x in enumerate(pts) for y in pts[i + 1:]]
    return min(d) if d else 2.0


def _root_gradient(problem: _Problem, twice_j: int, roots: np.ndarray, h: float):
    # central differences in (Re r_k, Im r_k), steps scaled by the local chart factor
    scale = (1 + np.abs(roots) ** 2) / 2
    stencil = []
    for k in range(roots.size):
        for direction in (1, 1j):
            for sign in (1, -1):
                r = roots.copy()
                r[k] += sign * direction * h * scale[k]
                stencil.append(_roots_to_components(twice_j, r))
    vals = problem.values(np.array(stencil)).reshape(roots.size, 2, 2)
    du = ((vals[:, :, 0] - vals[:, :, 1]) / (2 * h)) @ np.array([1, 1j])
    # descent direction in root coordinates for the scaled metric
    return du * scale, float(np.linalg.norm(du))


def _descend_roots(problem: _Problem, a: np.ndarray, opts: SearchOptions,
                   history: list):
    """Descent in the Majorana-root coordinates; returns (components, iterations).

    Stops once two roots come closer than ``opts.switch_distance`` (where
    the parametrization degenerates), when a root drifts far from the
    chart centre, or when the objective stalls.
    """
    tj = problem.twice_j
    state = SpinState.from_components(tj, _normalize(a))
    roots = _centred_roots(state)
    if roots is None or tj == 1:
        return state.orthonormal_components(), 0
    comps = _roots_to_components(tj, roots)
    problem.recentre(comps)
    f = problem.value(comps)
    history.append(f)
    g, gnorm = _root_gradient(problem, tj, roots, opts.gradient_step)
    step = 0.1
    it = 0
    while it < opts.max_iters:
        if _min_root_distance(roots) < opts.switch_distance or np.max(np.abs(roots)) > 10:
            break
        if gnorm <= opts.gradient_tolerance:
            break
        it += 1
        t = step
        accepted = False
        for _ in range(40):
            trial = roots - t * g
            ft = problem.value(_roots_to_components(tj, trial))
            if ft <= f - 1e-4 * t * gnorm ** 2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        improvement = f - ft
        comps = _roots_to_components(tj, trial)
        problem.recentre(comps)
        f = min(f, problem.value(comps))
        history.append(f)
        g_new, gnorm = _root_gradient(problem, tj, trial, opts.gradient_step)
        s, y = trial - roots, g_new - g
        sy = _real_inner(s, y)
        step = float(np.clip(_real_inner(s, s) / sy, 1e-6, 10.0)) if sy > 0 else min(2 * t, 10.0)
        roots, g = trial, g_new
        if improvement < opts.tolerance:
            break
    return _roots_to_components(tj, roots), it


def _run_start(problem: _Problem, twice_j: int, opts: SearchOptions, start: int) -> _StartOutcome:
    a = random_state(twice_j, [opts.seed, start]).orthonormal_components()
    history = []
    used = 0
    if opts.parametrization == "majorana_roots":
        a, used = _descend_roots(problem, a, opts, history)
    out = _descend_coefficients(problem, a, opts, opts.max_iters, history)
    out.iterations += used
    return out


def _multistart(twice_j: int, objective, opts: SearchOptions, rule, sign: float,
                gradient=None) -> SearchResult:
    rule = default_rule() if rule is None else rule
    outcomes = []
    for start in range(opts.starts_for(twice_j)):
        problem = _Problem(twice_j, objective, rule, gradient)
        outcomes.append(_run_start(problem, twice_j, opts, start))
    values = [sign * o.value for o in outcomes]
    # ties resolved by the lowest start index
    if sign > 0:
        best = min(range(len(values)), key=lambda i: (values[i], i))
    else:
        best = max(range(len(values)), key=lambda i: (values[i], -i))
    o = outcomes[best]
    state = SpinState.from_components(twice_j, _normalize(o.components))
    return SearchResult(state, values[best], values, o.converged,
                        sum(x.iterations for x in outcomes), best,
                        [sign * v for v in o.history])


def minimize_wehrl(twice_j: int, opts: SearchOptions | None = None,
                   rule: QuadratureRule | None = None) -> SearchResult:
    """Multistart minimization of the Wehrl entropy over normalized states."""
    opts = SearchOptions() if opts is None else opts
    return _multistart(twice_j, _entropy_objective(twice_j), opts, rule, 1.0,
                       _entropy_gradient(twice_j))


def maximize_norm_ratio(twice_j: int, exponents: ExponentPair, opts: SearchOptions | None = None,
                        rule: QuadratureRule | None = None) -> SearchResult:
    """Multistart maximization of nnorm_q(f) / nnorm_p(f)."""
    opts = SearchOptions() if opts is None else opts
    p, q = exponents.p, exponents.q
    if p == q:
        state = random_state(twice_j, [opts.seed, 0])
        n = opts.starts_for(twice_j)
        return SearchResult(state, 1.0, [1.0] * n, True, 0, 0, [1.0])
    return _multistart(twice_j, _negative_ratio_objective(twice_j, p, q), opts, rule, -1.0)


@dataclass(frozen=True)
class ScanRow:
    n: int
    q: float
    max_ratio: float
    violations: int


@dataclass
class ScanReport:
    twice_j: int
    p: float
    num_samples: int
    seed: int
    rows: list
    coherent_ratios: list

    CSV_FIELDS = ("n", "q", "max_ratio", "violations")

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "twice_j": self.twice_j,
            "p": self.p,
            "num_samples": self.num_samples,
            "seed": self.seed,
            "rows": [vars(r) for r in self.rows],
            "coherent_ratios": list(self.coherent_ratios),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for r in self.rows:
            w.writerow([r.n, repr(r.q), repr(r.max_ratio), r.violations])
        return buf.getvalue()


MONOTONICITY_SLACK = 1e-9


def monotonicity_scan(twice_j: int, p: float, n_max: int, num_samples: int, seed: int,
                      rule: QuadratureRule | None = None) -> ScanReport:
    """Largest sampled nnorm_{p+n/j} / nnorm_p for n = 1..n_max.

    A violation is a sample with nnorm_{p+n/j} > nnorm_p + 1e-9.  The
    coherent state K(., 0) is evaluated alongside as a sharpness witness
    (its ratios are 1).
    """
    j = twice_j / 2
    p = float(p)
    if p <= 1 / j:
        raise InvalidArgumentError(f"need p > 1/j = {1 / j!r}, got p = {p!r}")
    if p < 1:
        raise InvalidArgumentError("need p >= 1")
    if n_max < 1 or num_samples < 1:
        raise InvalidArgumentError("n_max and num_samples must be positive")
    qs = [p + n / j for n in range(1, n_max + 1)]
    max_ratio = [0.0] * n_max
    violations = [0] * n_max
    for i in range(num_samples):
        f = random_state(twice_j, [seed, i])
        norms = norm_profile(f, [p] + qs, rule)
        for k, q in enumerate(qs):
            max_ratio[k] = max(max_ratio[k], norms[q] / norms[p])
            if norms[q] > norms[p] + MONOTONICITY_SLACK:
                violations[k] += 1
    coh = norm_profile(coherent_state(twice_j, 0), [p] + qs, rule)
    rows = [ScanRow(n + 1, qs[n], max_ratio[n], violations[n]) for n in range(n_max)]
    return ScanReport(twice_j, p, num_samples, seed, rows, [coh[q] / coh[p] for q in qs])
