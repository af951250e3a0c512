"""Randomized checks of the kernel inequalities on a (t, s) grid.

Each inequality is turned into a margin (right side minus left side, or
the negated defect for identities) that must stay >= -SLACK at every
sampled point.  The worst margin per inequality is reported together
with the point where it occurred.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .greens import BvpParams, cone_constants, g_kernel, green

SLACK = 1e-12
DEFAULT_THETAS = (0.1, 0.25, 0.4)
GRID_POINTS = 101

INEQUALITIES = (
    "g_symmetric",
    "g_nonnegative",
    "g_below_diagonal",
    "g_above_min_t",
    "g_above_theta_on_window",
    "G_nonnegative",
    "G_below_k1",
    "G_window_above_k2",
    "gamma_in_unit_interval",
)


@dataclass
class Worst:
    margin: float = np.inf
    params: Optional[BvpParams] = None
    theta: Optional[float] = None
    t: Optional[float] = None
    s: Optional[float] = None

    def update(self, margin: np.ndarray, params, t, s, theta=None):
        """Fold an array of margins (indexed like t/s) into the running worst."""
        if margin.size == 0:
            return
        k = int(np.argmin(margin))
        m = float(margin.flat[k])
        if m < self.margin:
            self.margin = m
            self.params = params
            self.theta = theta
            self.t = None if t is None else float(np.broadcast_to(t, margin.shape).flat[k])
            self.s = None if s is None else float(np.broadcast_to(s, margin.shape).flat[k])


@dataclass
class VerifyReport:
    cases: int
    thetas: tuple
    worst: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    # k2 violations whose eta lies outside [theta, 1 - theta]
    k2_violations_eta_outside: int = 0
    k2_skipped: int = 0

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())


def random_params(rng: np.random.Generator) -> BvpParams:
    """Draw a valid parameter tuple, keeping clear of the degenerate edges."""
    eta = rng.uniform(0.02, 0.98)
    alpha = rng.uniform(0.0, 0.98) / eta
    bound = (1.0 - alpha * eta) / (1.0 - eta)
    beta = rng.uniform(0.0, 0.98) * bound
    tau = rng.uniform(0.02, 0.98)
    return BvpParams(alpha=alpha, beta=beta, eta=eta, tau=tau, lam=1.0)


def verify_lemmas(seed: int = 0, num_cases: int = 100, thetas=DEFAULT_THETAS,
                  k1_scale: float = 1.0, require_eta_window: bool = False,
                  points: int = GRID_POINTS) -> VerifyReport:
    """Run the inequality suite on ``num_cases`` random parameter tuples.

    ``k1_scale`` multiplies k1 before checking (a mutation hook for tests).
    With ``require_eta_window`` the k2 inequality is only checked when
    theta <= eta <= 1 - theta; the skipped (case, theta) pairs are counted.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, points)
    T, S = np.meshgrid(t, t, indexing="ij")
    g = g_kernel(T, S)
    gss = g_kernel(t, t)
    report = VerifyReport(cases=num_cases, thetas=tuple(thetas))
    worst = {name: Worst() for name in INEQUALITIES}
    violations = {name: 0 for name in INEQUALITIES}

    def record(name, margin, params, tt, ss, theta=None):
        worst[name].update(margin, params, tt, ss, theta)
        if margin.size and margin.min() < -SLACK:
            violations[name] += 1
            return True
        return False

    # parameter-free properties of g
    record("g_symmetric", -np.abs(g - g.T), None, T, S)
    record("g_nonnegative", g, None, T, S)
    record("g_below_diagonal", gss[None, :] - g, None, T, S)
    record("g_above_min_t", g - np.minimum(T, 1.0 - T) * gss[None, :], None, T, S)
    for theta in thetas:
        rows = (t >= theta - 1e-12) & (t <= 1.0 - theta + 1e-12)
        record("g_above_theta_on_window", g[rows] - theta * gss[None, :],
               None, T[rows], S[rows], theta)

    for _ in range(num_cases):
        params = random_params(rng)
        G = green(params, T, S)
        record("G_nonnegative", G, params, T, S)
        for theta in thetas:
            cc = cone_constants(params, theta)
            k1 = cc.k1 * k1_scale
            record("G_below_k1", k1 * gss[None, :] - G, params, T, S, theta)
            record("gamma_in_unit_interval",
                   np.array([cc.gamma, 1.0 - cc.gamma]), params, None, None, theta)
            in_window = theta <= params.eta <= 1.0 - theta
            if require_eta_window and not in_window:
                report.k2_skipped += 1
                continue
            rows = (t >= theta - 1e-12) & (t <= 1.0 - theta + 1e-12)
            Gw = G[rows]
            k = np.argmin(Gw, axis=0)
            margin = Gw[k, np.arange(points)] - cc.k2 * gss
            if record("G_window_above_k2", margin, params, t[rows][k], t, theta):
                report.k2_violations_eta_outside += not in_window
    report.worst = worst
    report.violations = violations
    return report


def format_report(report: VerifyReport) -> str:
    lines = [f"{report.cases} cases, theta in {list(report.thetas)}, slack {SLACK:g}"]
    for name in INEQUALITIES:
        w = report.worst[name]
        count = report.violations[name]
        status = "ok" if count == 0 else f"VIOLATED in {count} check(s)"
        lines.append(f"{name:<26} worst slack {w.margin + 0.0: .6e}  {status}")
        if count:
            p = w.params
            where = []
            if p is not None:
                where.append(f"alpha={p.alpha!r} beta={p.beta!r} eta={p.eta!r} tau={p.tau!r}")
            if w.theta is not None:
                where.append(f"theta={w.theta!r}")
            if w.t is not None:
                where.append(f"t={w.t!r} s={w.s!r}")
            lines.append("    worst at " + " ".join(where))
    if report.violations["G_window_above_k2"]:
        lines.append(
            f"    {report.k2_violations_eta_outside} of "
            f"{report.violations['G_window_above_k2']} k2 violation(s) have eta "
            "outside [theta, 1-theta]")
    if report.k2_skipped:
        lines.append(f"k2 check skipped for {report.k2_skipped} (case, theta) pair(s) "
                     "with eta outside [theta, 1-theta]")
    return "\n".join(lines)
