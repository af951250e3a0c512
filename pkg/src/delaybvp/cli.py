"""Command-line front end.

    delaybvp solve CONFIG
    delaybvp check CONFIG
    delaybvp verify --seed S --cases N
    delaybvp sweep CONFIG --axis name:lo:hi:steps [--axis ...]

Exit codes: 0 success, 1 configuration error, 2 solver did not converge
(solve), 3 inequality violation (verify).
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .conditions import (GrowthEstimate, check_theorems, compute_M1, compute_M2,
                         estimate_f0, estimate_finf, max_f, probe_N)
from .config import ConfigError, ProblemConfig, load_config
from .errors import BvpError, NegativeData, NonFiniteEvaluation, NotConverged
from .fixedpoint import (SolutionFunction, cone_check, picard_solve, sup_norm_01,
                         sup_norm_full)
from .greens import BvpParams, cone_constants
from .lemmas import DEFAULT_THETAS, format_report, verify_lemmas
from .oracle import newton_solve
from .quadrature import interp_cubic, make_grid

log = logging.getLogger("delaybvp")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_VIOLATION = 0, 1, 2, 3
SWEEP_AXES = ("lambda", "alpha", "beta", "eta", "tau")
_PARAM_FIELD = {"lambda": "lam", "alpha": "alpha", "beta": "beta", "eta": "eta", "tau": "tau"}


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def key_value_text(items, title: str) -> str:
    lines = [f"# {title}"]
    for key, value in items:
        if key == "note":
            lines.append(f"# {value}")
        else:
            lines.append(f"{key} = {fmt(value)}")
    return "\n".join(lines) + "\n"


def solution_csv(params: BvpParams, u: SolutionFunction) -> str:
    """Rows "t,u" over [-tau, 1]; history rows carry the constant beta*u(eta)."""
    h = u.grid.h
    count = math.ceil(params.tau / h - 1e-9)
    hist_t = [-params.tau + k * h for k in range(count)]
    rows = ["t,u"]
    rows += [f"{fmt(t)},{fmt(u.history_value)}" for t in hist_t if t < -1e-12]
    rows += [f"{fmt(t)},{fmt(v)}" for t, v in zip(u.grid.nodes, u.values)]
    return "\n".join(rows) + "\n"


def solve_problem(cfg: ProblemConfig, params: BvpParams | None = None, fallback=True):
    """Picard solve with Newton fallback.

    Returns (solution, diagnostics, source) where source is "picard" or
    "oracle".  Raises NotConverged if both fail.
    """
    params = params or cfg.params
    try:
        u, diag = picard_solve(params, cfg.a, cfg.f, cfg.solver, n=cfg.n)
        return u, diag, "picard"
    except NotConverged as exc:
        if not fallback:
            raise
        diag = exc.diagnostics
        log.info("Picard failed (%s); trying the Newton oracle", exc)
        grid = make_grid(cfg.oracle_n)
        start = None
        if exc.solution is not None and np.all(np.isfinite(exc.solution.values)):
            start = np.interp(grid.nodes, exc.solution.grid.nodes, exc.solution.values)
        try:
            values = newton_solve(params, cfg.a, cfg.f, grid, initial=start)
        except (NotConverged, BvpError) as inner:
            raise NotConverged(f"{exc}; oracle fallback also failed: {inner}",
                               solution=exc.solution, diagnostics=diag) from None
        u = SolutionFunction(grid, values,
                             params.beta * interp_cubic(grid, values, params.eta))
        return u, diag, "oracle"


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    params = cfg.params
    cc = cone_constants(params, cfg.theta)
    try:
        u, diag, source = solve_problem(cfg)
    except NegativeData as exc:
        raise ConfigError(str(exc)) from None
    except (NotConverged, NonFiniteEvaluation) as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        items = [("status", "not_converged"), ("message", str(exc))]
        if diag is not None:
            items += [("iterations", diag.iterations),
                      ("final_residual", diag.final_residual)]
        atomic_write(cfg.output("report"), key_value_text(items, "solve diagnostics"))
        return EXIT_NOT_CONVERGED
    u_eta = interp_cubic(u.grid, u.values, params.eta)
    items = [
        ("status", "converged"),
        ("source", source),
        ("n", u.grid.n),
        ("iterations", diag.iterations),
        ("final_residual", diag.final_residual),
        ("picard_converged", diag.converged),
        ("relaxation", diag.relaxation),
        ("history_value", u.history_value),
        ("u_eta", u_eta),
        ("bc_residual_left", abs(u.values[0] - params.beta * u_eta)),
        ("bc_residual_right", abs(u.values[-1] - params.alpha * u_eta)),
        ("sup_norm_01", sup_norm_01(u)),
        ("sup_norm_full", sup_norm_full(u)),
        ("min_value", float(u.values.min())),
        ("theta", cfg.theta),
        ("gamma", cc.gamma),
        ("cone_check", cone_check(u, cc)),
    ]
    atomic_write(cfg.output("solution_csv"), solution_csv(params, u))
    atomic_write(cfg.output("report"), key_value_text(items, "solve diagnostics"))
    print(f"converged ({source}); wrote {cfg.output('solution_csv')}")
    return EXIT_OK


def growth_estimates(cfg: ProblemConfig):
    t_grid = make_grid(max(2, min(cfg.n, 64)))
    f0 = GrowthEstimate.user(cfg.f0) if cfg.f0 is not None else estimate_f0(cfg.f, t_grid)
    finf = (GrowthEstimate.user(cfg.finf) if cfg.finf is not None
            else estimate_finf(cfg.f, t_grid))
    return t_grid, f0, finf


def condition_items(cfg: ProblemConfig, solve: bool = True):
    params = cfg.params
    grid = make_grid(cfg.n)
    cc = cone_constants(params, cfg.theta)
    M1 = compute_M1(params, cfg.a, grid)
    M2 = compute_M2(params, cfg.a, grid)
    t_grid, f0, finf = growth_estimates(cfg)
    N = cfg.N if cfg.N is not None else probe_N(finf)
    fmax = max_f(cfg.f, t_grid, N) if N is not None else None
    report = check_theorems(params, M1, M2, f0, finf, fmax=fmax, N=N)
    items = [
        ("alpha", params.alpha), ("beta", params.beta), ("eta", params.eta),
        ("tau", params.tau), ("lambda", params.lam), ("theta", cfg.theta),
        ("M1", report.M1), ("M2", report.M2),
        ("k1", report.k1), ("k2", cc.k2), ("gamma", cc.gamma),
        ("f0", f0.value), ("f0_kind", f0.kind), ("f0_raw", f0.raw),
        ("finf", finf.value), ("finf_kind", finf.kind), ("finf_raw", finf.raw),
        ("theorem1_applicable", report.theorem1_applicable),
        ("lambda_max_thm1", report.lambda_max_thm1),
        ("theorem2_applicable", report.theorem2_applicable),
        ("lambda_max_thm2", report.lambda_max_thm2),
        ("N", N), ("fmax_on_0_N", fmax), ("B_thm2", report.B_thm2),
    ]
    if solve:
        try:
            u, _, source = solve_problem(cfg, fallback=False)
            norm = sup_norm_full(u)
            within = None if report.B_thm2 is None else norm <= report.B_thm2
            items += [("solution_status", "converged"), ("solution_sup_norm", norm),
                      ("solution_within_B", within), ("solution_cone_check", cone_check(u, cc))]
            if within is False:
                report.notes.append("Computed solution exceeds the a-priori radius B.")
        except (NotConverged, NonFiniteEvaluation) as exc:
            items += [("solution_status", "not_converged")]
            report.notes.append(f"Picard solve did not converge: {exc}")
    items += [("note", note) for note in report.notes]
    return report, items


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    try:
        _, items = condition_items(cfg)
    except NegativeData as exc:
        raise ConfigError(str(exc)) from None
    text = key_value_text(items, "sufficient-condition report")
    atomic_write(cfg.output("check_report"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_lemmas(seed=args.seed, num_cases=args.cases,
                           thetas=tuple(args.theta or DEFAULT_THETAS),
                           k1_scale=args.k1_scale,
                           require_eta_window=args.eta_window)
    print(format_report(report))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def parse_axis(spec: str):
    parts = spec.split(":")
    if len(parts) != 4:
        raise ConfigError(f"axis spec must be name:lo:hi:steps, got {spec!r}")
    name, lo, hi, steps = parts
    if name not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {name!r} (choose from {', '.join(SWEEP_AXES)})")
    try:
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise ConfigError(f"malformed axis spec {spec!r}") from None
    if steps < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError(f"malformed axis spec {spec!r}")
    return name, np.linspace(lo, hi, steps)


def sweep_row(cfg: ProblemConfig, f0, finf, overrides: dict):
    base = cfg.params
    fields = dict(alpha=base.alpha, beta=base.beta, eta=base.eta, tau=base.tau, lam=base.lam)
    for name, value in overrides.items():
        fields[_PARAM_FIELD[name]] = float(value)
    try:
        if not fields["lam"] > 0:
            raise BvpError("lambda must be positive")
        params = BvpParams(**fields)
    except BvpError:
        return ["invalid", None, None, None, None, None]
    grid = make_grid(cfg.n)
    report = check_theorems(params, compute_M1(params, cfg.a, grid),
                            compute_M2(params, cfg.a, grid), f0, finf)
    converged, norm, cone = False, None, None
    try:
        u, _ = picard_solve(params, cfg.a, cfg.f, cfg.solver, n=cfg.n)
        converged, norm = True, sup_norm_01(u)
        cone = cone_check(u, cone_constants(params, cfg.theta))
    except (NotConverged, NonFiniteEvaluation):
        pass
    return ["ok", report.theorem1_applicable, report.theorem2_applicable,
            converged, norm, cone]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    axes = [parse_axis(spec) for spec in args.axis]
    if not 1 <= len(axes) <= 2:
        raise ConfigError("give one or two --axis specs")
    names = [name for name, _ in axes]
    if len(set(names)) != len(names):
        raise ConfigError("sweep axes must be distinct")
    _, f0, finf = growth_estimates(cfg)
    header = names + ["status", "thm1_applicable", "thm2_applicable",
                      "picard_converged", "sup_norm", "cone_check"]
    lines = [",".join(header)]
    for combo in itertools.product(*(values for _, values in axes)):
        try:
            row = sweep_row(cfg, f0, finf, dict(zip(names, combo)))
        except NegativeData as exc:
            raise ConfigError(str(exc)) from None
        lines.append(",".join(fmt(v) for v in list(combo) + row))
    atomic_write(cfg.output("sweep_csv"), "\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} rows to {cfg.output('sweep_csv')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaybvp",
        description="Three-point delay boundary value problems via Green's functions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem and write the solution CSV")
    p.add_argument("config")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="evaluate the sufficient existence conditions")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="randomized kernel inequality suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--theta", type=float, action="append",
                   help="window parameter (repeatable; default 0.1, 0.25, 0.4)")
    p.add_argument("--eta-window", action="store_true",
                   help="check the k2 bound only when theta <= eta <= 1-theta")
    p.add_argument("--k1-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="sweep parameters and write a CSV table")
    p.add_argument("config")
    p.add_argument("--axis", action="append", required=True,
                   help="name:lo:hi:steps with name in " + ", ".join(SWEEP_AXES))
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify" and args.cases < 0:
        parser.error("--cases must be nonnegative")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
