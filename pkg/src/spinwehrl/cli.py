"""Command-line entry point: ``python3 -m spinwehrl <command> [flags]``.

Commands
--------
entropy       Wehrl / Renyi-Wehrl entropies and both lower bounds for one state
bounds        the Lieb and unconditional bounds and their gap for spin j
verify-norms  lattice monotonicity scan nnorm_{p+n/j} <= nnorm_p
minimize      multistart minimization of the Wehrl entropy
carlen        both sides of the Dirichlet-integral identity for one state
ode           shoot the radial Euler-Lagrange ODE and run its diagnostics
sweep         norm ratios on a (j, q) grid, lattice points marked proven

Flags may also come from a config file (``--config path``) of ``key = value``
lines, where keys are flag names without the leading dashes; flags given on
the command line win.  ``SPINWEHRL_QUADRATURE=NP,NA`` sets the default rule.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric or
I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

from .carlen import carlen_residual
from .entropy import bound_gap, entropy_report, lieb_bound, norm_profile, theorem2_bound
from .errors import IntegrationFailure, InvalidArgumentError, NumericDomainError, PreconditionError
from .radial import OdeProblem, boundary_scan, coherent_profile, el_residual, energy_diagnostic, shoot
from .search import SearchOptions, minimize_wehrl, monotonicity_scan, random_state
from .sphere import build_quadrature, chordal_distance
from .states import SpinState, coherent_state, majorana_roots, make_state

__all__ = ["RunConfig", "UsageError", "parse_config", "run", "write_report", "format_json", "main"]

COMMANDS = ("entropy", "bounds", "verify-norms", "minimize", "carlen", "ode", "sweep")
QUADRATURE_ENV = "SPINWEHRL_QUADRATURE"

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    """Bad flags, config keys or parameter values."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    twice_j: int | None
    quadrature: tuple
    seed: int
    output_format: str
    output_path: str | None
    params: dict = field(default_factory=dict)


@dataclass
class Report:
    payload: dict
    header: list
    rows: list
    ok: bool = True


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _real(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite real, got {text!r}")
    return v


def _coeffs(text: str) -> tuple:
    try:
        return tuple(complex(t.strip().replace(" ", "")) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse coefficients {text!r}") from exc


def _pair(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return tuple(_real(t) for t in parts)


def _quadrature_default() -> tuple:
    env = os.environ.get(QUADRATURE_ENV)
    if not env:
        return (64, 128)
    try:
        n_polar, n_azimuth = (int(t) for t in env.split(","))
    except ValueError as exc:
        raise UsageError(f"{QUADRATURE_ENV} must look like '64,128', got {env!r}") from exc
    if n_polar < 2 or n_azimuth < 4:
        raise UsageError(f"{QUADRATURE_ENV} needs n_polar >= 2 and n_azimuth >= 4")
    return n_polar, n_azimuth


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--twice-j", type=_positive_int)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--n-polar", type=_positive_int)
    common.add_argument("--n-azimuth", type=_positive_int)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output")
    common.add_argument("--config")

    parser = _Parser(prog="spinwehrl", description="Wehrl entropy and norm inequalities for spin states")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("entropy", parents=[common])
    p.add_argument("--coeffs", type=_coeffs)

    sub.add_parser("bounds", parents=[common])

    p = sub.add_parser("verify-norms", parents=[common])
    p.add_argument("--p", type=_real, default=2.0)
    p.add_argument("--n-max", type=_positive_int, default=3)
    p.add_argument("--samples", type=_positive_int, default=1000)

    p = sub.add_parser("minimize", parents=[common])
    p.add_argument("--starts", type=_positive_int)
    p.add_argument("--max-iters", type=_positive_int, default=400)
    p.add_argument("--parametrization", choices=("coefficients", "majorana_roots"),
                   default="coefficients")

    p = sub.add_parser("carlen", parents=[common])
    p.add_argument("--q", type=_real, default=2.0)
    p.add_argument("--coeffs", type=_coeffs)

    p = sub.add_parser("ode", parents=[common])
    p.add_argument("--p", type=_real, default=2.0)
    p.add_argument("--q", type=_real)
    p.add_argument("--b-el", type=_real, default=1.0)
    p.add_argument("--u0", type=_real)
    p.add_argument("--u0-range", type=_pair)
    p.add_argument("--scan-points", type=_positive_int, default=64)
    p.add_argument("--points", type=_positive_int, default=512)

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--p", type=_real, default=2.0)
    p.add_argument("--n-max", type=_positive_int, default=2)
    p.add_argument("--samples", type=_positive_int, default=200)
    return parser


def _config_tokens(path: str, allowed: set) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    tokens = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag not in allowed or flag == "--config":
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        tokens += [flag, value]
    return tokens


def parse_config(argv, config_path: str | None = None) -> RunConfig:
    """Parse argv (without the program name) into a validated :class:`RunConfig`.

    Config-file values are inserted before the command-line flags so that
    the latter take precedence.  Raises :class:`UsageError`.
    """
    argv = list(argv)
    parser = _build_parser()
    first = parser.parse_args(argv)
    config_path = first.config or config_path
    if config_path:
        subparser = parser._subparsers._group_actions[0].choices[first.command]
        allowed = {s for a in subparser._actions for s in a.option_strings}
        argv = [argv[0]] + _config_tokens(config_path, allowed) + argv[1:]
        first = parser.parse_args(argv)
    args = vars(first)
    command = args.pop("command")
    twice_j = args.pop("twice_j")
    if twice_j is None:
        raise UsageError(f"{command} needs --twice-j")
    n_polar, n_azimuth = _quadrature_default()
    n_polar = args.pop("n_polar") or n_polar
    n_azimuth = args.pop("n_azimuth") or n_azimuth
    if n_polar < 2 or n_azimuth < 4:
        raise UsageError("need --n-polar >= 2 and --n-azimuth >= 4")
    seed, fmt, out = args.pop("seed"), args.pop("format"), args.pop("output")
    args.pop("config")
    _validate(command, twice_j, args)
    return RunConfig(command, twice_j, (n_polar, n_azimuth), seed, fmt, out, args)


def _validate(command: str, twice_j: int, a: dict) -> None:
    j = twice_j / 2
    if command == "entropy" or command == "carlen":
        if a.get("coeffs") is not None and len(a["coeffs"]) != twice_j + 1:
            raise UsageError(f"--coeffs needs {twice_j + 1} entries for twice_j = {twice_j}")
    if command in ("verify-norms", "sweep"):
        if a["p"] < 1:
            raise UsageError(f"--p must be >= 1, got {a['p']}")
    if command == "verify-norms" and a["p"] <= 1 / j:
        raise UsageError(f"--p must exceed 1/j = {1 / j}, got {a['p']}")
    if command == "carlen" and a["q"] <= 0:
        raise UsageError("--q must be positive")
    if command == "ode":
        q = a["q"] if a["q"] is not None else a["p"] + 1 / j
        a["q"] = q
        if not (q > a["p"] >= q / 2):
            raise UsageError(f"ode needs q > p >= q/2, got p = {a['p']}, q = {q}")
        if a["b_el"] <= 0:
            raise UsageError("--b-el must be positive")
        if a["u0"] is not None and a["u0"] <= 0:
            raise UsageError("--u0 must be positive")
        if a["u0_range"] is not None and not 0 < a["u0_range"][0] < a["u0_range"][1]:
            raise UsageError("--u0-range needs 0 < lo < hi")


# ---------------------------------------------------------------- commands

def _state(cfg: RunConfig) -> SpinState:
    coeffs = cfg.params.get("coeffs")
    if coeffs is None:
        return random_state(cfg.twice_j, cfg.seed)
    f = make_state(cfg.twice_j, coeffs)
    if f.is_zero():
        raise UsageError("--coeffs describes the zero state")
    return f.normalized()


def _rule(cfg: RunConfig):
    return build_quadrature(*cfg.quadrature)


def _cmd_entropy(cfg: RunConfig) -> Report:
    rep = entropy_report(_state(cfg), _rule(cfg))
    d = rep.to_dict()
    return Report(d, list(rep.CSV_FIELDS), [rep.csv_row()], rep.slack_thm2 >= -1e-8)


def _cmd_bounds(cfg: RunConfig) -> Report:
    tj = cfg.twice_j
    gap = bound_gap(tj)
    limit = 1 / (2 * tj)        # 1/(4j)
    d = {"twice_j": tj, "lieb_bound": lieb_bound(tj), "thm2_bound": theorem2_bound(tj),
         "gap": gap, "gap_limit": limit}
    return Report(d, list(d), [list(d.values())], 0 <= gap < limit)


def _cmd_verify_norms(cfg: RunConfig) -> Report:
    a = cfg.params
    rep = monotonicity_scan(cfg.twice_j, a["p"], a["n_max"], a["samples"], cfg.seed, _rule(cfg))
    d = rep.to_dict()
    d["total_violations"] = rep.total_violations
    rows = [[r.n, r.q, r.max_ratio, r.violations] for r in rep.rows]
    return Report(d, list(rep.CSV_FIELDS), rows, rep.total_violations == 0)


def _root_spread(state: SpinState) -> float:
    roots = majorana_roots(state)
    return max((chordal_distance(a, b) for a in roots for b in roots), default=0.0)


def _cmd_minimize(cfg: RunConfig) -> Report:
    a = cfg.params
    opts = SearchOptions(seed=cfg.seed, num_starts=a["starts"], max_iters=a["max_iters"],
                         parametrization=a["parametrization"])
    res = minimize_wehrl(cfg.twice_j, opts, _rule(cfg))
    d = res.to_dict()
    d["lieb_bound"] = lieb_bound(cfg.twice_j)
    d["thm2_bound"] = theorem2_bound(cfg.twice_j)
    d["root_spread"] = _root_spread(res.best_state)
    header = ["twice_j", "best_value", "lieb_bound", "thm2_bound", "root_spread", "converged",
              "best_start", "iterations_used"]
    row = [cfg.twice_j] + [d[k] for k in header[1:]]
    return Report(d, header, [row], res.best_value >= d["thm2_bound"] - 1e-8)


def _cmd_carlen(cfg: RunConfig) -> Report:
    f = _state(cfg)
    chk = carlen_residual(f, cfg.params["q"], _rule(cfg))
    d = chk.to_dict()
    d["state"] = f.to_dict()
    header = ["twice_j", "q", "lhs", "rhs", "rel_residual"]
    return Report(d, header, [[d[k] for k in header]], chk.rel_residual <= 1e-6)


def _cmd_ode(cfg: RunConfig) -> Report:
    a = cfg.params
    prob = OdeProblem(cfg.twice_j, a["p"], a["q"], a["b_el"])
    u0 = a["u0"] if a["u0"] is not None else prob.A_expected
    sol = shoot(prob, u0, n_points=a["points"])
    d = {"problem": prob.to_dict(), "u0": u0, "hit_zero": sol.hit_zero,
         "theta_zero": sol.theta_zero, "boundary_value": sol.boundary_value,
         "el_residual": el_residual(prob, sol)}
    ok = d["el_residual"] <= 1e-5
    if prob.on_lattice:
        coh = coherent_profile(prob, a["points"])
        n = sol.theta_grid.size
        d["coherent_el_residual"] = el_residual(prob, coh)
        d["coherent_energy_deviation"] = energy_diagnostic(prob, coh)
        if abs(u0 - prob.A_expected) <= 1e-12 * prob.A_expected:
            d["sup_error_vs_coherent"] = float(max(abs(sol.u_values - coh.u_values[:n])))
    if a["u0_range"] is not None:
        roots = boundary_scan(prob, a["u0_range"], a["scan_points"])
        d["admissible_u0"] = roots
        if prob.on_lattice:
            lo, hi = a["u0_range"]
            expected = 1 if lo < prob.A_expected < hi else 0
            ok = ok and len(roots) == expected
    rows = [[t, u, du] for t, u, du in zip(sol.theta_grid, sol.u_values, sol.du_values)]
    return Report(d, ["theta", "u", "du"], rows, ok)


def _cmd_sweep(cfg: RunConfig) -> Report:
    """Norm ratios on q = p + k/(2j), k = 1..2 n_max, for every twice_j up to --twice-j.

    Even k lie on the proven lattice (when p > 1/j); odd k are conjectural.
    Only proven points can fail the run.
    """
    a = cfg.params
    p, rule = a["p"], _rule(cfg)
    rows, ok = [], True
    for tj in range(1, cfg.twice_j + 1):
        j = tj / 2
        qs = [p + k / (2 * j) for k in range(1, 2 * a["n_max"] + 1)]
        max_ratio = [0.0] * len(qs)
        viol = [0] * len(qs)
        for i in range(a["samples"]):
            norms = norm_profile(random_state(tj, [cfg.seed, tj, i]), [p] + qs, rule)
            for k, q in enumerate(qs):
                max_ratio[k] = max(max_ratio[k], norms[q] / norms[p])
                viol[k] += norms[q] > norms[p] + 1e-9
        coh = norm_profile(coherent_state(tj, 0), [p] + qs, rule)
        for k, q in enumerate(qs):
            proven = (k + 1) % 2 == 0 and p > 1 / j
            rows.append([tj, p, q, "proven" if proven else "conjectural", max_ratio[k], viol[k],
                         coh[q] / coh[p]])
            ok = ok and not (proven and viol[k])
    header = ["twice_j", "p", "q", "status", "max_ratio", "violations", "coherent_ratio"]
    d = {"seed": cfg.seed, "samples": a["samples"], "points": [dict(zip(header, r)) for r in rows]}
    return Report(d, header, rows, ok)


_COMMANDS = {
    "entropy": _cmd_entropy, "bounds": _cmd_bounds, "verify-norms": _cmd_verify_norms,
    "minimize": _cmd_minimize, "carlen": _cmd_carlen, "ode": _cmd_ode, "sweep": _cmd_sweep,
}


# ---------------------------------------------------------------- output

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    # keep integral values recognizable as floats when read back
    return text if any(c in text for c in ".en") else text + ".0"


def format_json(obj) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    def enc(o):
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(int(o))
        if isinstance(o, float) or hasattr(o, "dtype") and o.dtype.kind == "f":
            return _fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            items = sorted((str(k), v) for k, v in o.items())
            return "{" + ", ".join(f"{json.dumps(k)}: {enc(v)}" for k, v in items) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(enc(v) for v in o) + "]"
        if hasattr(o, "tolist"):
            return enc(o.tolist())
        raise TypeError(f"cannot serialize {type(o).__name__}")
    return enc(obj) + "\n"


def _csv_cell(v):
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float) or hasattr(v, "dtype") and v.dtype.kind == "f":
        return _fmt_float(float(v))
    return v


def write_report(report: Report, fmt: str, path: str | None) -> None:
    """Write ``report`` as JSON or CSV to ``path`` (standard output when None)."""
    if fmt == "json":
        text = format_json(report.payload)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.header)
        for row in report.rows:
            w.writerow([_csv_cell(v) for v in row])
        text = buf.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run(cfg: RunConfig) -> int:
    """Execute a parsed configuration; returns the exit code."""
    try:
        report = _COMMANDS[cfg.command](cfg)
    except (UsageError, InvalidArgumentError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericDomainError, IntegrationFailure, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        write_report(report, cfg.output_format, cfg.output_path)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not report.ok:
        print("verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except (UsageError, InvalidArgumentError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)
