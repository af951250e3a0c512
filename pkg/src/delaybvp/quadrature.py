"""Uniform grids, composite Simpson quadrature and the discrete Green operator.

The discrete operator realizes ``u(t_i) = sum_j K[i, j] y(s_j)`` with

    u(t) = (1 - t) int_0^t s y(s) ds + t int_t^1 (1 - s) y(s) ds + c(t) J,

i.e. the Dirichlet part is integrated piecewise on [0, t_i] and [t_i, 1]
so that the kink of g(t_i, .) at s = t_i never falls inside a panel.  The
rank-one correction integral ``J = int g(eta, s) y(s) ds`` is taken as
the cubic interpolant of the Dirichlet part at eta, which makes the
three-point boundary conditions hold exactly for the interpolated u.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidGrid, LengthMismatch
from .greens import BvpParams, boundary_coefficient, g_kernel

DEFAULT_SOLVE_N = 512
DEFAULT_TEST_N = 256


@dataclass(frozen=True, eq=False)
class Grid:
    n: int
    nodes: np.ndarray
    h: float

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n == self.n

    def __hash__(self):
        return hash(("Grid", self.n))

    def __len__(self):
        return self.n + 1


@dataclass(frozen=True)
class QuadratureRule:
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


def make_grid(n: int) -> Grid:
    if isinstance(n, bool) or int(n) != n or n < 2 or n % 2:
        raise InvalidGrid(f"n must be an even integer >= 2, got {n!r}")
    n = int(n)
    nodes = np.arange(n + 1, dtype=float) / n
    nodes.flags.writeable = False
    return Grid(n=n, nodes=nodes, h=1.0 / n)


def _simpson_weights(m: int, h: float) -> np.ndarray:
    """Composite Simpson weights for m (even) intervals of width h."""
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def _panel_weights(m: int, h: float) -> np.ndarray:
    """Fourth-order weights for m >= 2 intervals: Simpson, plus a trailing
    3/8 panel when m is odd."""
    w = np.zeros(m + 1)
    if m % 2 == 0:
        w += _simpson_weights(m, h)
    else:
        if m > 3:
            w[: m - 2] += _simpson_weights(m - 3, h)
        w[m - 3:] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


# Integrates a cubic through nodes 0..3 over [x0, x1] only.
_ONE_INTERVAL = np.array([9.0, 19.0, -5.0, 1.0]) / 24.0


def simpson_rule(grid: Grid) -> QuadratureRule:
    w = _simpson_weights(grid.n, grid.h)
    w.flags.writeable = False
    return QuadratureRule(weights=w)


def integrate(rule: QuadratureRule, values) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != rule.weights.shape:
        raise LengthMismatch(
            f"expected {len(rule.weights)} values, got shape {values.shape}"
        )
    return float(rule.weights @ values)


def left_weights(grid: Grid, i: int) -> np.ndarray:
    """Node weights (length n+1) integrating a smooth function over [0, t_i]."""
    n, h = grid.n, grid.h
    w = np.zeros(n + 1)
    if i == 0:
        return w
    if i == 1:
        w[:4] = _ONE_INTERVAL * h
        return w
    w[: i + 1] = _panel_weights(i, h)
    return w


def right_weights(grid: Grid, i: int) -> np.ndarray:
    """Node weights integrating a smooth function over [t_i, 1]."""
    return left_weights(grid, grid.n - i)[::-1].copy()


def cubic_weights(grid: Grid, x: float) -> tuple[int, np.ndarray]:
    """Four-point Lagrange weights for evaluating at ``x`` in [0, 1].

    Returns the first stencil index and the four weights.
    """
    n, h = grid.n, grid.h
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"interpolation point {x!r} outside [0, 1]")
    j0 = int(np.clip(np.floor(x / h) - 1, 0, n - 3)) if n >= 3 else 0
    m = min(4, n + 1)
    xs = grid.nodes[j0:j0 + m]
    w = np.ones(m)
    for k in range(m):
        for l in range(m):
            if l != k:
                w[k] *= (x - xs[l]) / (xs[k] - xs[l])
    return j0, w


def interp_cubic(grid: Grid, values, x: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n + 1,):
        raise LengthMismatch(f"expected {grid.n + 1} values, got {values.shape}")
    j0, w = cubic_weights(grid, x)
    return float(w @ values[j0:j0 + len(w)])


def interpolation_row(grid: Grid, x: float) -> np.ndarray:
    """Dense row r with r @ values == interp_cubic(grid, values, x)."""
    row = np.zeros(grid.n + 1)
    j0, w = cubic_weights(grid, x)
    row[j0:j0 + len(w)] = w
    return row


@lru_cache(maxsize=16)
def _dirichlet_matrix(n: int) -> np.ndarray:
    grid = make_grid(n)
    t = grid.nodes
    if n < 4:
        w = simpson_rule(grid).weights
        K = g_kernel(t[:, None], t[None, :]) * w[None, :]
    else:
        K = np.empty((n + 1, n + 1))
        for i in range(n + 1):
            K[i] = ((1.0 - t[i]) * left_weights(grid, i) * t
                    + t[i] * right_weights(grid, i) * (1.0 - t))
    K.flags.writeable = False
    return K


@lru_cache(maxsize=32)
def _green_matrix(params: BvpParams, n: int) -> np.ndarray:
    grid = make_grid(n)
    K = _dirichlet_matrix(n)
    at_eta = interpolation_row(grid, params.eta) @ K
    M = K + np.outer(boundary_coefficient(params, grid.nodes), at_eta)
    M.flags.writeable = False
    return M


@lru_cache(maxsize=32)
def _ramp_response(params: BvpParams, n: int, x0: float) -> np.ndarray:
    grid = make_grid(n)
    t = grid.nodes
    # w'' = -(t - x0)_+ with w(0) = w(1) = 0
    w = (t * (1.0 - x0) ** 3 - np.maximum(t - x0, 0.0) ** 3) / 6.0
    # eta value by the same interpolation as the discrete correction, so the
    # boundary conditions stay exact
    W = w + boundary_coefficient(params, t) * (interpolation_row(grid, params.eta) @ w)
    W.flags.writeable = False
    return W


def ramp_response(params: BvpParams, grid: Grid, x0: float) -> np.ndarray:
    """Node values of int_0^1 G(t, s) (s - x0)_+ ds, in closed form.

    Used to take a slope jump at x0 out of the integrand before quadrature.
    """
    return _ramp_response(params, grid.n, float(x0))


def green_matrix(params: BvpParams, grid: Grid) -> np.ndarray:
    """Matrix M with green_apply(params, grid, y) == M @ y (read-only, cached)."""
    return _green_matrix(params, grid.n)


def green_apply(params: BvpParams, grid: Grid, y_values) -> np.ndarray:
    """Discrete u(t_i) = int_0^1 G(t_i, s) y(s) ds at every grid node."""
    y = np.asarray(y_values, dtype=float)
    if y.shape != (grid.n + 1,):
        raise LengthMismatch(f"expected {grid.n + 1} values, got shape {y.shape}")
    return green_matrix(params, grid) @ y
