"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line (shown with ``-s`` and in the
terminal summary) before asserting.
"""
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from delaybvp.conditions import check_theorems, compute_M1, compute_M2, GrowthEstimate
from delaybvp.expr import EvalError, ExprSyntaxError, Expression, evaluate, parse
from delaybvp.fixedpoint import SolverConfig, cone_check, picard_solve, solution_from_values
from delaybvp.greens import BvpParams, cone_constants, upper_constant
from delaybvp.lemmas import format_report, random_params, verify_lemmas
from delaybvp.oracle import newton_solve
from delaybvp.quadrature import green_apply, interp_cubic, make_grid
from delaybvp.cli import main

from exprgen import random_source

WORKED = BvpParams(alpha=1.0, beta=0.0, eta=0.5, tau=0.25, lam=1.0)


def const(value):
    return lambda t: np.full(np.shape(t), float(value))


def test_criterion_01_green_reconstruction(acceptance):
    start = time.perf_counter()
    grid = make_grid(256)
    params = BvpParams(alpha=0.0, beta=0.0, eta=0.5, tau=0.5)
    u = green_apply(params, grid, np.sin(np.pi * grid.nodes))
    err = np.max(np.abs(u - np.sin(np.pi * grid.nodes) / np.pi ** 2))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-8 and elapsed < 1.0
    acceptance.record(1, ok, f"sup error {err:.2e} (<= 1e-8), {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_02_boundary_identity(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    grid = make_grid(512)
    s = grid.nodes
    worst = 0.0
    for _ in range(100):
        params = random_params(rng)
        degree = rng.integers(0, 5)
        # nonnegative on [0, 1]: nonnegative coefficients in s and 1 - s
        c = rng.uniform(0.0, 2.0, degree + 1)
        mix = rng.uniform(0.0, 1.0)
        y = mix * np.polyval(c, s) + (1 - mix) * np.polyval(c, 1.0 - s)
        u = green_apply(params, grid, y)
        u_eta = interp_cubic(grid, u, params.eta)
        worst = max(worst, abs(u[0] - params.beta * u_eta), abs(u[-1] - params.alpha * u_eta))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 30.0
    acceptance.record(2, ok, f"worst BC residual {worst:.2e} (<= 1e-8), {elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_03_kernel_inequalities(acceptance):
    # Run over the full valid parameter domain as stated.  The lower bound
    # with k2 does not hold when eta lies outside [theta, 1 - theta], so
    # this criterion is expected to fail; see the README.
    start = time.perf_counter()
    report = verify_lemmas(seed=0, num_cases=100, thetas=(0.1, 0.25, 0.4))
    elapsed = time.perf_counter() - start
    ok = report.ok and elapsed < 60.0
    bad = {k: v for k, v in report.violations.items() if v}
    detail = (f"violations {bad or 'none'}, {report.k2_violations_eta_outside} "
              f"with eta outside window, {elapsed:.2f}s (< 60s)")
    acceptance.record(3, ok, detail)
    assert ok, format_report(report)


def _cone_cases():
    rng = np.random.default_rng(4)
    grid = make_grid(512)
    s = grid.nodes
    for _ in range(50):
        params = random_params(rng)
        theta = float(rng.choice([0.1, 0.25, 0.4]))
        kind = rng.integers(0, 3)
        if kind == 0:
            y = np.polyval(rng.uniform(0, 1, 4), s)
        elif kind == 1:
            y = np.abs(np.sin(rng.uniform(1, 12) * s + rng.uniform(0, 6)))
        else:
            # a narrow bump, the hardest case for the lower bound
            y = np.exp(-((s - rng.uniform()) / rng.uniform(0.01, 0.1)) ** 2)
        yield params, theta, grid, y


def test_criterion_04_cone_property(acceptance):
    start = time.perf_counter()
    worst = np.inf
    for params, theta, grid, y in _cone_cases():
        u = green_apply(params, grid, y)
        cc = cone_constants(params, theta)
        sol = solution_from_values(params, grid, u)
        window = (grid.nodes >= theta - 1e-12) & (grid.nodes <= 1 - theta + 1e-12)
        worst = min(worst, u[window].min() - cc.gamma * np.abs(u).max())
        assert cone_check(sol, cc) == (u[window].min() >= cc.gamma * np.abs(u).max() - 1e-10)
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-10 and elapsed < 30.0
    acceptance.record(4, ok, f"worst min - gamma*norm {worst:.3e} (>= -1e-10), "
                             f"{elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_05_positivity(acceptance):
    worst = np.inf
    for params, _, grid, y in _cone_cases():
        worst = min(worst, green_apply(params, grid, y).min())
    ok = worst >= -1e-12
    acceptance.record(5, ok, f"smallest node value {worst:.3e} (>= -1e-12)")
    assert ok


# (source, Lipschitz constant of f in u)
BOUNDED_F = [
    ("u/(1+u)+1", 1.0),
    ("1 + sin(u)^2/2", 0.5),
    ("2 - 1/(1+u)", 1.0),
    ("1 + 0.5*exp(-u)", 0.5),
    ("1 + t*u/(1+u)", 1.0),
]
WEIGHTS = ["1", "1 + t", "0.5 + t*(1-t)"]


def test_criterion_06_oracle_equivalence(acceptance):
    # lambda is drawn below 1 / (L k1 M1), the small-u condition with f0
    # replaced by the Lipschitz constant L (f0 itself is infinite when f(0) > 0)
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    coarse, fine = make_grid(512), make_grid(1024)
    diffs = []
    for k in range(10):
        src, lip = BOUNDED_F[k % len(BOUNDED_F)]
        a = Expression(WEIGHTS[k % len(WEIGHTS)], {"t"})
        f = Expression(src)
        params = random_params(rng)
        bound = 1.0 / (lip * upper_constant(params) * compute_M1(params, a, coarse))
        params = params.replace(lam=float(rng.uniform(0.2, 0.8)) * bound)
        u, diag = picard_solve(params, a, f, SolverConfig(tol=1e-12, max_iter=2000), n=512)
        ref = newton_solve(params, a, f, fine)
        diffs.append(np.max(np.abs(u.values - ref[::2])))
    elapsed = time.perf_counter() - start
    worst = max(diffs)
    ok = worst <= 1e-5 and elapsed < 120.0
    acceptance.record(6, ok, f"worst Picard/Newton gap {worst:.2e} (<= 1e-5), "
                             f"{elapsed:.2f}s (< 120s)")
    assert ok


def test_criterion_07_condition_arithmetic(acceptance):
    grid = make_grid(512)
    a = const(1.0)
    M1 = compute_M1(WORKED, a, grid)
    M2 = compute_M2(WORKED, a, grid)
    cc = cone_constants(WORKED, 0.25)
    report = check_theorems(WORKED, M1, M2, GrowthEstimate.user(1.0), GrowthEstimate.user(1.0))

    # by hand: F(s) = s^2/2 - s^3/3 is an antiderivative of s(1-s)
    def F(s):
        return s * s / 2 - s ** 3 / 3
    q = Fraction(1, 4)
    M1_ref = F(Fraction(1)) - F(q)            # beta = 0 drops [0, tau]
    M2_ref = F(Fraction(1)) - F(Fraction(0))
    d = (1 - Fraction(1) * Fraction(1, 2)) - 0 * (1 - Fraction(1, 2))
    k1_ref = 1 + max(Fraction(1), Fraction(0)) / d
    theta = Fraction(1, 4)
    k2_ref = theta * (1 + (0 + min(1 * theta, 1 * (1 - theta))) / d)
    lam_ref = 1 / (k1_ref * M1_ref)
    checks = {
        "M1": (M1, M1_ref, Fraction(9, 64)),
        "M2": (M2, M2_ref, Fraction(1, 6)),
        "k1": (report.k1, k1_ref, Fraction(3)),
        "k2": (cc.k2, k2_ref, Fraction(3, 8)),
        "gamma": (cc.gamma, k2_ref / k1_ref, Fraction(1, 8)),
        "lambda_max_thm1": (report.lambda_max_thm1, lam_ref, Fraction(64, 27)),
    }
    bad = [name for name, (got, ref, stated) in checks.items()
           if ref != stated or abs(got - float(ref)) > 1e-10]
    ok = not bad and report.theorem1_applicable
    acceptance.record(7, ok, "M1, M2, k1, k2, gamma, lambda_max within 1e-10"
                      + (f"; mismatched {bad}" if bad else ""))
    assert ok


def test_criterion_08_theorem_regime_smoke(acceptance):
    a, f = const(1.0), Expression("u")
    grid = make_grid(512)
    assert 1.0 * 1.0 * upper_constant(WORKED) * compute_M1(WORKED, a, grid) == pytest.approx(27 / 64)
    # start away from the trivial fixed point u = 0
    u, diag = picard_solve(WORKED, a, f, SolverConfig(max_iter=200, initial=1.0), n=512)
    cc = cone_constants(WORKED, 0.25)
    ok = diag.converged and diag.iterations <= 200 and u.values.min() >= 0.0 and cone_check(u, cc)
    acceptance.record(8, ok, f"converged in {diag.iterations} iterations (<= 200), "
                             f"min {u.values.min():.2e}, cone_check {cone_check(u, cc)}")
    assert ok


def test_criterion_09_parser_conformance(acceptance):
    start = time.perf_counter()
    exact = {
        "2+3*4": 14.0, "(2+3)*4": 20.0, "2^3^2": 512.0, "8/4/2": 1.0,
        "8-4-2": 2.0, "-2^2": -4.0, "2*-3": -6.0, "min(3, 1, 2)": 1.0,
        "max(t, u)": 2.0, "sqrt(u) + log(1)": math.sqrt(2.0), "abs(-pi)": math.pi,
    }
    failures = [s for s, want in exact.items()
                if not math.isclose(evaluate(parse(s), 1.0, 2.0), want, rel_tol=1e-15)]
    for src in ("log(0)", "sqrt(-1)", "1/0", "exp(1000)", "0^-1"):
        try:
            evaluate(parse(src), 0.0, 0.0)
            failures.append(src)
        except EvalError:
            pass
    for src in ("1 +", "(1", "sin()", "2 $ 3", "1 2"):
        try:
            parse(src)
            failures.append(src)
        except ExprSyntaxError:
            pass
    rnd = random.Random(9)
    panics = 0
    for _ in range(1000):
        tree = parse(random_source(rnd, rnd.randint(0, 6)))
        t, u = rnd.uniform(0, 1), rnd.uniform(0, 10)
        try:
            value = evaluate(tree, t, u)
        except EvalError:
            continue
        except Exception:
            panics += 1
            continue
        if not math.isfinite(value):
            panics += 1
    elapsed = time.perf_counter() - start
    ok = not failures and panics == 0 and elapsed < 10.0
    acceptance.record(9, ok, f"{len(failures)} fixed-case failures, {panics} panics in 1000 "
                             f"fuzz cases, {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_10_sweep_determinism(acceptance, tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text('alpha = 0.5\nbeta = 0.5\neta = 0.5\ntau = 0.25\nlambda = 1\n'
                   'a = "1"\nf = "u/(1+u)+1"\nn = 128\n')
    args = ["sweep", str(cfg), "--axis", "lambda:0.1:3:6", "--axis", "tau:0.1:0.9:3"]
    outputs = []
    for _ in range(2):
        assert main(args) == 0
        outputs.append((tmp_path / "sweep.csv").read_bytes())
    ok = outputs[0] == outputs[1]
    acceptance.record(10, ok, f"two sweeps byte-identical ({len(outputs[0])} bytes)")
    assert ok
