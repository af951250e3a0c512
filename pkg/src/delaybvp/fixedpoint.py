"""The fixed-point operator for the delay problem and a relaxed Picard solver.

On [0, 1] the operator is

    (Tu)(t) = lam * int_0^1 G(t, s) a(s) f(s, u(s - tau)) ds,

and on [-tau, 0] it is the constant beta * u(eta).  A SolutionFunction
stores the node values on [0, 1] together with that constant.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .errors import NegativeData, NonFiniteEvaluation, NotConverged
from .expr import EvalError
from .greens import BvpParams, ConeConstants
from .quadrature import (DEFAULT_SOLVE_N, Grid, green_matrix, interp_cubic,
                         interpolation_row, make_grid, ramp_response)

log = logging.getLogger(__name__)

# Undershoot below zero tolerated (and clipped) before f is evaluated.
UNDERSHOOT_TOL = 1e-8
RELAXATION_FLOOR = 1.0 / 16.0
GROWTH_PATIENCE = 5
# a step counts as stalled unless the residual drops below this fraction
# of the previous one (slow 2-cycles shrink by well under 0.1% per step)
STALL_RATIO = 1.0 - 1e-3
DIVERGENCE_CAP = 1e100


@dataclass(frozen=True, eq=False)
class SolutionFunction:
    grid: Grid
    values: np.ndarray
    history_value: float

    def __post_init__(self):
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError(
                f"expected {self.grid.n + 1} values, got shape {self.values.shape}")

    def at(self, t: float) -> float:
        """u(t) for t in [-tau, 1]; the history constant for t <= 0."""
        if t <= 0.0:
            return self.history_value
        return interp_cubic(self.grid, self.values, t)


def solution_from_values(params: BvpParams, grid: Grid, values) -> SolutionFunction:
    """Wrap node values, deriving the history constant beta * u(eta)."""
    values = np.array(values, dtype=float)
    return SolutionFunction(grid, values,
                            params.beta * interp_cubic(grid, values, params.eta))


@dataclass
class SolverConfig:
    """Picard settings.

    ``initial`` is ``"zero"``, a float (constant start) or an array of
    node values.
    """

    tol: float = 1e-10
    max_iter: int = 500
    relaxation: float = 1.0
    initial: Union[str, float, np.ndarray] = "zero"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation!r}")
        if isinstance(self.initial, str) and self.initial != "zero":
            raise ValueError(f"unknown initial iterate {self.initial!r}")


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    final_residual: float = float("inf")
    converged: bool = False
    residual_history: list = field(default_factory=list)
    relaxation: float = 1.0
    message: str = ""


def _sample(fn: Callable, shape, *args) -> np.ndarray:
    """Evaluate a user callable on node arrays, broadcasting constant results."""
    try:
        out = np.asarray(fn(*args), dtype=float)
    except (EvalError, OverflowError, ZeroDivisionError, FloatingPointError) as exc:
        raise NonFiniteEvaluation(str(exc)) from exc
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    return out


@lru_cache(maxsize=32)
def _delay_operator(n: int, tau: float):
    """Interpolation matrix and history mask for u(s_j - tau) at every node."""
    grid = make_grid(n)
    shifted = grid.nodes - tau
    in_history = shifted <= 0.0
    D = np.zeros((n + 1, n + 1))
    for j in np.flatnonzero(~in_history):
        D[j] = interpolation_row(grid, shifted[j])
    D.flags.writeable = False
    in_history.flags.writeable = False
    return D, in_history


def delayed_values(u: SolutionFunction, tau: float) -> np.ndarray:
    """u(s_j - tau) at every node s_j, using the history constant for s_j <= tau."""
    D, in_history = _delay_operator(u.grid.n, tau)
    return np.where(in_history, u.history_value, D @ u.values)


def delayed_value(u: SolutionFunction, s: float, tau: float) -> float:
    if s - tau <= 0.0:
        return u.history_value
    return interp_cubic(u.grid, u.values, s - tau)


def forcing(params: BvpParams, a, f, u: SolutionFunction) -> np.ndarray:
    """Node values of lam * a(s) * f(s, u(s - tau)), with the data checks."""
    s = u.grid.nodes
    shape = s.shape
    v = delayed_values(u, params.tau)
    if not np.all(np.isfinite(v)):
        raise NonFiniteEvaluation("iterate has non-finite values")
    if v.min() < -UNDERSHOOT_TOL:
        raise NonFiniteEvaluation(
            f"delayed argument {v.min():.3e} is below zero beyond roundoff; "
            "f is only defined for u >= 0")
    v = np.maximum(v, 0.0)
    with np.errstate(all="ignore"):
        av = _sample(a, shape, s)
        fv = _sample(f, shape, s, v)
    for name, vals in (("a", av), ("f", fv)):
        if not np.all(np.isfinite(vals)):
            raise NonFiniteEvaluation(f"{name} returned a non-finite value")
        if vals.min() < 0.0:
            j = int(np.argmin(vals))
            raise NegativeData(f"{name} is negative ({vals[j]!r}) at s={s[j]!r}")
    return params.lam * av * fv


def _slope_jump(params: BvpParams, a, f, u: SolutionFunction, y: np.ndarray) -> float:
    """One-sided estimate of y'(tau+) - y'(tau-).

    The integrand follows the history branch lam a(s) f(s, beta u(eta)) up
    to s = tau and the delayed branch after it.  Both agree at tau, so the
    difference of the branches is fit by a quadratic through (tau, 0) and
    the two nodes past tau + h/2.
    """
    grid = u.grid
    s = grid.nodes
    j = int(np.searchsorted(s, params.tau + 0.5 * grid.h))
    if j + 1 > grid.n:
        return 0.0
    pts = s[j:j + 2]
    hist = np.full(2, max(u.history_value, 0.0))
    with np.errstate(all="ignore"):
        branch = params.lam * _sample(a, (2,), pts) * _sample(f, (2,), pts, hist)
    d = y[j:j + 2] - branch
    if not np.all(np.isfinite(d)):
        return 0.0
    x1, x2 = pts - params.tau
    # p(x) = A x + B x (x - x1) through (0, 0), (x1, d1), (x2, d2); p'(0) = A - B x1
    A = d[0] / x1
    B = (d[1] - A * x2) / (x2 * (x2 - x1))
    return float(A - B * x1)


def apply_T(params: BvpParams, a, f, u: SolutionFunction) -> SolutionFunction:
    """One application of the operator.

    Delayed values come from the input's history constant; the output's
    history constant is recomputed from the output.  The integrand has a
    slope jump at s = tau (end of the history segment); it is removed with
    a ramp (s - tau)_+ whose Green's integral is known in closed form, which
    keeps the quadrature at full order when tau is off the grid.
    """
    grid = u.grid
    y = forcing(params, a, f, u)
    c = _slope_jump(params, a, f, u, y)
    ramp = np.maximum(grid.nodes - params.tau, 0.0)
    values = green_matrix(params, grid) @ (y - c * ramp) + c * ramp_response(params, grid, params.tau)
    return solution_from_values(params, grid, values)


def _initial(params, grid, config):
    init = config.initial
    if isinstance(init, str):
        values = np.zeros(grid.n + 1)
    elif np.ndim(init) == 0:
        values = np.full(grid.n + 1, float(init))
    else:
        values = np.array(init, dtype=float)
        if values.shape != (grid.n + 1,):
            raise ValueError(
                f"initial iterate must have {grid.n + 1} values, got {values.shape}")
    return solution_from_values(params, grid, values)


def picard_solve(params: BvpParams, a, f, config: SolverConfig | None = None,
                 n: int = DEFAULT_SOLVE_N):
    """Iterate u <- (1 - w) u + w T(u) until sup|T(u) - u| <= tol.

    Returns ``(solution, diagnostics)`` where the solution is the iterate
    whose residual met the tolerance.  When the residual fails to drop
    below STALL_RATIO times its previous value for GROWTH_PATIENCE
    consecutive steps the relaxation weight is halved, down to
    RELAXATION_FLOOR.  Raises NotConverged (carrying the last iterate and
    diagnostics) when iterations run out, the iterates blow up, or the
    stall persists at the floor.
    """
    config = config or SolverConfig()
    grid = make_grid(n)
    u = _initial(params, grid, config)
    omega = config.relaxation
    diag = SolveDiagnostics(relaxation=omega)
    growth = 0
    prev = np.inf

    def fail(message):
        diag.message = message
        diag.relaxation = omega
        raise NotConverged(message, solution=u, diagnostics=diag)

    for k in range(1, config.max_iter + 1):
        Tu = apply_T(params, a, f, u)
        r = float(np.max(np.abs(Tu.values - u.values)))
        diag.iterations = k
        diag.final_residual = r
        diag.residual_history.append(r)
        if not np.isfinite(r) or np.max(np.abs(Tu.values)) > DIVERGENCE_CAP:
            fail(f"iterates diverged after {k} iterations")
        if r <= config.tol:
            diag.converged = True
            diag.relaxation = omega
            diag.message = f"converged in {k} iterations"
            return u, diag
        # a stalled residual (e.g. a 2-cycle) counts as growth
        growth = growth + 1 if r >= STALL_RATIO * prev else 0
        prev = r
        if growth >= GROWTH_PATIENCE:
            if omega <= RELAXATION_FLOOR:
                fail(f"residual stalled or grew at relaxation {omega}")
            omega = max(omega / 2.0, RELAXATION_FLOOR)
            growth = 0
            log.debug("residual growth; relaxation reduced to %g", omega)
        u = solution_from_values(params, grid, (1.0 - omega) * u.values + omega * Tu.values)
    fail(f"no convergence within {config.max_iter} iterations "
         f"(residual {diag.final_residual:.3e})")


def fixed_point_residual(params: BvpParams, a, f, u: SolutionFunction) -> float:
    return float(np.max(np.abs(apply_T(params, a, f, u).values - u.values)))


def sup_norm_01(u: SolutionFunction) -> float:
    return float(np.max(np.abs(u.values)))


def sup_norm_full(u: SolutionFunction) -> float:
    return max(sup_norm_01(u), abs(u.history_value))


def window_mask(grid: Grid, theta: float) -> np.ndarray:
    """Nodes in [theta, 1 - theta], tolerant to rounding of theta."""
    t = grid.nodes
    return (t >= theta - 1e-12) & (t <= 1.0 - theta + 1e-12)


def cone_check(u: SolutionFunction, constants: ConeConstants) -> bool:
    """min over [theta, 1-theta] of u >= gamma * ||u||_1 (1e-10 slack)."""
    window = u.values[window_mask(u.grid, constants.theta)]
    return bool(window.min() >= constants.gamma * sup_norm_01(u) - 1e-10)
