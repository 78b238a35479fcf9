"""The radial Euler-Lagrange problem behind the nesting theorem.

A maximizer u = |f|^{q/2} of the variational quotient satisfies

    u + kappa Delta u = b u^{s-1},    kappa = 4 / (qj (qj + 2)),  s = 2p/q,

with Delta the Laplace-Beltrami operator of the unit sphere.  For a
rotationally symmetric u(theta) this is the ODE

    u'' + cot(theta) u' + phi(u) = 0,   phi(u) = beta u - alpha u^{s-1},

with beta = 1/kappa = qj(qj+2)/4 and alpha = b/kappa.  In the stereographic
radius r = tan(theta/2) the same equation reads
(1 + r^2)^2 (u_rr + u_r/r) + 4 phi(u) = 0.

When q = p + 1/j the decaying profile u = A ((1 + cos theta)/2)^{qj/2}
= A (1+r^2)^{-qj/2} solves it exactly, with
A = ((qj+2) b / (qj))^{q / (2(q-p))}; this is |K(., 0)|^{q/2} up to scale.

Shooting starts at a small theta_0 from the regular series
u = u0 + a theta^2 + c theta^4 (a = -phi(u0)/4, c = a (2/3 - phi'(u0))/16)
and integrates towards theta = pi, where the equation has another regular
singular point: generic solutions pick up a ln(pi - theta) term there, and
the admissible ones are those that stay positive and vanish at pi.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .entropy import ExponentPair
from .errors import IntegrationFailure, InvalidArgumentError

__all__ = [
    "OdeProblem",
    "RadialSolution",
    "problem_from_exponents",
    "coherent_profile",
    "shoot",
    "boundary_value",
    "boundary_scan",
    "el_residual",
    "energy_diagnostic",
    "equilibrium_value",
    "default_grid",
]

DEFAULT_POINTS = 512
THETA_START = 1e-3
THETA_GAP = 1e-4      # integration stops at pi - THETA_GAP
RTOL = ATOL = 1e-10


@dataclass(frozen=True)
class OdeProblem:
    """Radial problem for spin ``twice_j/2``, exponents q/2 <= p < q, constant b > 0."""

    twice_j: int
    p: float
    q: float
    b_el: float
    s: float = field(init=False)
    alpha_theta: float = field(init=False)
    beta_theta: float = field(init=False)
    A_expected: float = field(init=False)

    def __post_init__(self):
        if int(self.twice_j) != self.twice_j or self.twice_j < 1:
            raise InvalidArgumentError("twice_j must be a positive integer")
        p, q, b = float(self.p), float(self.q), float(self.b_el)
        # p = q/2 (s = 1, constant forcing) is kept as a degenerate but well-posed case
        if not (q > p >= q / 2):
            raise InvalidArgumentError(f"need q > p >= q/2, got p={p!r}, q={q!r}")
        if not (math.isfinite(b) and b > 0):
            raise InvalidArgumentError(
                f"b_el must be positive (the nonlinearity cannot be switched off), got {b!r}")
        j = self.twice_j / 2
        qj = q * j
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "b_el", b)
        object.__setattr__(self, "s", 2 * p / q)
        object.__setattr__(self, "beta_theta", qj * (qj + 2) / 4)
        object.__setattr__(self, "alpha_theta", qj * (qj + 2) * b / 4)
        object.__setattr__(self, "A_expected", ((qj + 2) * b / qj) ** (q / (2 * (q - p))))

    @property
    def j(self) -> float:
        return self.twice_j / 2

    @property
    def kappa(self) -> float:
        return 1 / self.beta_theta

    @property
    def on_lattice(self) -> bool:
        """True when q = p + 1/j, the case in which the coherent profile is exact."""
        return abs((self.q - self.p) * self.j - 1) <= 1e-12

    def phi(self, u):
        return self.beta_theta * u - self.alpha_theta * np.power(u, self.s - 1)

    def dphi(self, u):
        return self.beta_theta - self.alpha_theta * (self.s - 1) * np.power(u, self.s - 2)

    def Phi_r(self, u):
        """Antiderivative of the r-form nonlinearity 4 phi, vanishing at u = 0."""
        return 4 * (self.beta_theta * u ** 2 / 2 - self.alpha_theta * np.power(u, self.s) / self.s)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["on_lattice"] = self.on_lattice
        return d


def problem_from_exponents(twice_j: int, exponents: ExponentPair, b_el: float) -> OdeProblem:
    return OdeProblem(twice_j, exponents.p, exponents.q, b_el)


def equilibrium_value(problem: OdeProblem) -> float:
    """The constant solution u* with phi(u*) = 0, i.e. u* = b^{1/(2-s)}."""
    return problem.b_el ** (1 / (2 - problem.s))


def default_grid(n_points: int = DEFAULT_POINTS) -> np.ndarray:
    """Uniform grid theta_i = i pi / n, i = 1..n (includes pi, excludes 0)."""
    return np.pi * np.arange(1, n_points + 1) / n_points


@dataclass
class RadialSolution:
    theta_grid: np.ndarray
    u_values: np.ndarray
    du_values: np.ndarray
    problem: OdeProblem
    u0: float
    method: str = "exact"
    theta_end: float = math.pi
    u_end: float = 0.0
    flux_end: float = 0.0
    hit_zero: bool = False
    theta_zero: float | None = None

    def __post_init__(self):
        t = np.asarray(self.theta_grid, dtype=float)
        u = np.asarray(self.u_values, dtype=float)
        du = np.asarray(self.du_values, dtype=float)
        if not (t.shape == u.shape == du.shape) or t.ndim != 1 or t.size < 2:
            raise InvalidArgumentError("theta, u and du grids must be 1-d and of equal length")
        if not (np.all(np.diff(t) > 0) and t[0] > 0 and t[-1] <= math.pi + 1e-15):
            raise InvalidArgumentError("theta grid must be increasing inside (0, pi]")
        self.theta_grid, self.u_values, self.du_values = t, u, du

    @property
    def boundary_value(self) -> float:
        """u near pi, or minus the remaining distance to pi if u reached zero first."""
        if self.hit_zero:
            return -(self.theta_end - self.theta_zero)
        return self.u_end

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "u", "du"])
        for row in zip(self.theta_grid, self.u_values, self.du_values):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.to_dict(),
            "u0": self.u0,
            "method": self.method,
            "theta_end": self.theta_end,
            "u_end": self.u_end,
            "flux_end": self.flux_end,
            "hit_zero": self.hit_zero,
            "theta_zero": self.theta_zero,
            "theta": self.theta_grid.tolist(),
            "u": self.u_values.tolist(),
            "du": self.du_values.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def coherent_profile(problem: OdeProblem, n_points: int = DEFAULT_POINTS,
                     amplitude: float | None = None) -> RadialSolution:
    """A ((1 + cos theta)/2)^{qj/2} and its exact derivative on the default grid."""
    A = problem.A_expected if amplitude is None else float(amplitude)
    m = problem.q * problem.j / 2
    t = default_grid(n_points)
    c = np.cos(t / 2) ** 2
    u = A * c ** m
    # du/dtheta = A m c^{m-1} dc/dtheta, dc/dtheta = -sin(theta)/2; written as
    # -A m cos^{2m-1}(theta/2) sin(theta/2) to stay finite at theta = pi
    du = -A * m * np.cos(t / 2) ** (2 * m - 1) * np.sin(t / 2)
    return RadialSolution(t, u, du, problem, A)


def _series_start(problem: OdeProblem, u0: float, theta0: float):
    phi0 = float(problem.phi(u0))
    a = -phi0 / 4
    c = a * (2 / 3 - float(problem.dphi(u0))) / 16
    return u0 + a * theta0 ** 2 + c * theta0 ** 4, 2 * a * theta0 + 4 * c * theta0 ** 3


def _rhs(problem: OdeProblem):
    def rhs(theta, y):
        u, v = y
        return [v, -v / math.tan(theta) - problem.phi(max(u, 0.0))]
    return rhs


def _rk4(problem: OdeProblem, y0, theta0: float, theta_end: float, n_steps: int):
    rhs = _rhs(problem)
    h = (theta_end - theta0) / n_steps
    ts = theta0 + h * np.arange(n_steps + 1)
    ys = np.empty((n_steps + 1, 2))
    y = np.array(y0, dtype=float)
    ys[0] = y
    for i in range(n_steps):
        t = ts[i]
        k1 = np.array(rhs(t, y))
        k2 = np.array(rhs(t + h / 2, y + h / 2 * k1))
        k3 = np.array(rhs(t + h / 2, y + h / 2 * k2))
        k4 = np.array(rhs(t + h, y + h * k3))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return ts, ys


def shoot(problem: OdeProblem, u0: float, n_points: int = DEFAULT_POINTS,
          theta_end: float | None = None, method: str = "DOP853",
          n_steps: int | None = None) -> RadialSolution:
    """Integrate the radial ODE from u(0) = u0, u'(0) = 0 towards theta = pi.

    ``method="DOP853"`` (default) uses adaptive Runge-Kutta with rtol = atol =
    1e-10 and returns dense output on the grid points of
    :func:`default_grid` that lie before ``theta_end`` (default pi - 1e-4).
    Integration stops where u reaches 0; later grid points are clamped to 0
    and the solution is flagged ``hit_zero``.

    ``method="rk4"`` uses ``n_steps`` classical fourth-order steps and
    returns the step grid; it exists to check the convergence order.
    """
    u0 = float(u0)
    if not (math.isfinite(u0) and u0 > 0):
        raise InvalidArgumentError(f"u0 must be positive, got {u0!r}")
    theta_end = math.pi - THETA_GAP if theta_end is None else float(theta_end)
    if not THETA_START < theta_end < math.pi:
        raise InvalidArgumentError(f"theta_end must lie in ({THETA_START}, pi)")
    y0 = _series_start(problem, u0, THETA_START)

    if method == "rk4":
        if n_steps is None or n_steps < 1:
            raise InvalidArgumentError("rk4 needs a positive n_steps")
        ts, ys = _rk4(problem, y0, THETA_START, theta_end, int(n_steps))
        hit = bool(np.any(ys[:, 0] <= 0))
        return RadialSolution(ts, ys[:, 0], ys[:, 1], problem, u0, "rk4", theta_end,
                              float(ys[-1, 0]), float(math.sin(theta_end) * ys[-1, 1]), hit,
                              float(ts[np.argmax(ys[:, 0] <= 0)]) if hit else None)
    if method != "DOP853":
        raise InvalidArgumentError(f"unknown method {method!r}")

    def hits_zero(theta, y):
        return y[0]
    hits_zero.terminal = True
    hits_zero.direction = -1

    sol = solve_ivp(_rhs(problem), (THETA_START, theta_end), y0, method="DOP853",
                    rtol=RTOL, atol=ATOL, dense_output=True, events=hits_zero)
    if sol.status == -1:
        raise IntegrationFailure(f"integration failed: {sol.message}", float(sol.t[-1]))
    hit = sol.status == 1
    reached = float(sol.t[-1])
    grid = default_grid(n_points)
    grid = grid[(grid >= THETA_START) & (grid <= theta_end)]
    u = np.zeros_like(grid)
    du = np.zeros_like(grid)
    inside = grid <= reached
    vals = sol.sol(grid[inside])
    u[inside], du[inside] = vals[0], vals[1]
    u = np.maximum(u, 0.0)
    y_end = sol.y[:, -1]
    return RadialSolution(grid, u, du, problem, u0, "DOP853", theta_end,
                          float(max(y_end[0], 0.0)), float(math.sin(reached) * y_end[1]),
                          hit, reached if hit else None)


def boundary_value(problem: OdeProblem, u0: float) -> float:
    """Shooting mismatch B(u0): u(pi - 1e-4) if u stays positive, else minus the
    angular distance between the first zero of u and pi - 1e-4.  B is
    continuous in u0 and vanishes at admissible initial values."""
    return shoot(problem, u0, n_points=8).boundary_value


def _admissible(problem: OdeProblem, u0: float, tol: float) -> bool:
    sol = shoot(problem, u0)
    if sol.hit_zero and sol.theta_zero < sol.theta_end - 1e-6:
        return False
    # a regular solution has sin(theta) u' -> 0 at pi; a logarithmic one does not
    return abs(sol.flux_end) <= tol * u0 and bool(np.all(sol.u_values[:-1] > 0))


def boundary_scan(problem: OdeProblem, u0_range, num_points: int = 64,
                  flux_tol: float = 1e-5) -> list:
    """All admissible initial values in ``u0_range`` found by scanning B(u0).

    B is sampled on a geometric grid of ``num_points`` values; each sign
    change is refined by Brent's method, and a root is kept if the solution
    is positive on (0, pi) and regular at pi (|sin(theta) u'| <= flux_tol * u0
    near pi).  Sign changes of B caused by a logarithmic solution passing
    through zero exactly at the end point fail the regularity test.
    """
    lo, hi = (float(x) for x in u0_range)
    if not 0 < lo < hi:
        raise InvalidArgumentError(f"need 0 < lo < hi, got ({lo!r}, {hi!r})")
    if num_points < 2:
        raise InvalidArgumentError("num_points must be at least 2")
    grid = np.geomspace(lo, hi, int(num_points))
    values = [boundary_value(problem, u) for u in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa == 0:
            cand = a
        elif fa * fb < 0:
            cand = brentq(lambda u: boundary_value(problem, u), a, b, xtol=1e-14, rtol=1e-14)
        else:
            continue
        if _admissible(problem, cand, flux_tol):
            roots.append(float(cand))
    if values[-1] == 0 and _admissible(problem, grid[-1], flux_tol):
        roots.append(float(grid[-1]))
    return roots


def _compact_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order compact (tridiagonal) derivative on a uniform grid.

    Interior rows: f'_{i-1}/3 + f'_i + f'_{i+1}/3
    = (14/9)(f_{i+1} - f_{i-1})/(2h) + (1/9)(f_{i+2} - f_{i-2})/(4h).
    The rows next to the ends use the fourth-order Pade scheme and the end
    rows the third-order closure f'_0 + 3 f'_1 = (-17 f_0 + 9 f_1 + 9 f_2 - f_3)/(6h).
    """
    n = f.size
    if n < 5:
        raise InvalidArgumentError("compact differentiation needs at least 5 points")
    ab = np.zeros((3, n))
    rhs = np.empty(n)
    ab[1, :] = 1.0
    ab[0, 2:] = 1 / 3
    ab[2, :-2] = 1 / 3
    rhs[2:-2] = (14 / 9) * (f[3:-1] - f[1:-3]) / (2 * h) + (1 / 9) * (f[4:] - f[:-4]) / (4 * h)
    ab[2, 0] = ab[0, 2] = 0.25
    ab[2, n - 3] = ab[0, n - 1] = 0.25
    rhs[1] = 0.75 * (f[2] - f[0]) / h
    rhs[-2] = 0.75 * (f[-1] - f[-3]) / h
    ab[0, 1] = 3.0
    ab[2, n - 2] = 3.0
    rhs[0] = (-17 * f[0] + 9 * f[1] + 9 * f[2] - f[3]) / (6 * h)
    rhs[-1] = -(-17 * f[-1] + 9 * f[-2] + 9 * f[-3] - f[-4]) / (6 * h)
    return solve_banded((1, 1), ab, rhs)


def _uniform_step(theta: np.ndarray) -> float:
    h = np.diff(theta)
    if np.max(np.abs(h - h[0])) > 1e-9 * h[0]:
        raise InvalidArgumentError("finite-difference diagnostics need a uniform grid")
    return float(h[0])


_EDGE = 4            # grid points at each end left out of the diagnostics (closure error)
END_MARGIN = 0.1     # radians kept clear of the far end of the solution's support


def el_residual(problem: OdeProblem, solution: RadialSolution,
                margin: float = END_MARGIN) -> float:
    """max |u + kappa Delta u - b u^{s-1}| over interior grid points.

    Delta u = u'' + cot(theta) u', with u' the stored derivative and u''
    obtained from it by sixth-order compact differences.  Interior means:
    u > 0 (clamped points are dropped), theta < pi, at least four grid
    points from either end, and at least ``margin`` radians before the last
    positive sample.  The margin matters only for non-admissible shots,
    which carry a ln(pi - theta) term near pi or a u^{1/3}-type cusp where
    they reach zero; neither can be differentiated on a fixed grid.
    Admissible and closed-form profiles are smooth up to the end.
    """
    t, u, du = solution.theta_grid, solution.u_values, solution.du_values
    h = _uniform_step(t)
    keep = (u > 0) & (t < math.pi)
    t, u, du = t[keep], u[keep], du[keep]
    if t.size < 2 * _EDGE + 4:
        raise InvalidArgumentError("solution grid too short for the residual")
    d2u = _compact_derivative(du, h)
    lap = d2u + du / np.tan(t)
    res = np.abs(u + problem.kappa * lap - problem.b_el * np.power(u, problem.s - 1))
    idx = np.arange(t.size)
    inside = (idx >= _EDGE) & (idx < t.size - _EDGE)
    if solution.hit_zero or solution.method != "exact":
        inside &= t <= t[-1] - margin
    if not np.any(inside):
        raise InvalidArgumentError("no interior grid points left for the residual")
    return float(np.max(res[inside]))


def energy_diagnostic(problem: OdeProblem, solution: RadialSolution,
                      r_range=(0.1, 10.0)) -> float:
    """Largest deviation from the dissipation identity on ``r_range``.

    With r = tan(theta/2), E(r) = (1/2)(1+r^2)^2 u_r^2 + Phi(u), where
    Phi' = 4 phi is the r-form nonlinearity.  The ODE implies

        E'(r) = -[(1+r^2)^2 / r - 2 r (1+r^2)] u_r^2,

    and the function returns max |E'(r) + [(1+r^2)^2/r - 2r(1+r^2)] u_r^2|
    with E' obtained by compact differentiation of E(theta(r)).
    """
    t, u, du = solution.theta_grid, solution.u_values, solution.du_values
    h = _uniform_step(t)
    keep = (u > 0) & (t < math.pi)
    t, u, du = t[keep], u[keep], du[keep]
    r = np.tan(t / 2)
    ur = 2 * du / (1 + r ** 2)
    energy = 2 * du ** 2 + problem.Phi_r(u)        # = (1/2)(1+r^2)^2 u_r^2 + Phi(u)
    dE_dr = _compact_derivative(energy, h) * 2 / (1 + r ** 2)
    dissipation = ((1 + r ** 2) ** 2 / r - 2 * r * (1 + r ** 2)) * ur ** 2
    dev = np.abs(dE_dr + dissipation)
    idx = np.arange(t.size)
    sel = (r >= r_range[0]) & (r <= r_range[1]) & (idx >= _EDGE) & (idx < t.size - _EDGE)
    if not np.any(sel):
        raise InvalidArgumentError("no grid points inside r_range")
    return float(np.max(dev[sel]))
