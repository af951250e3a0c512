"""Finite-difference Newton solver used to cross-check the Picard route.

Shares no code with the Green's function path: the unknowns are node
values, the equation is discretized with the three-point second
difference, the delayed argument uses linear interpolation and u(eta)
uses four-point Lagrange interpolation.

Residual rows::

    row 0      u_0 - beta * u(eta)
    row i      (u_{i-1} - 2 u_i + u_{i+1}) / h^2 + lam a(t_i) f(t_i, u(t_i - tau))
    row n      u_n - alpha * u(eta)

with u(t_i - tau) = beta * u(eta) whenever t_i <= tau.
"""
from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import NonFiniteEvaluation, NotConverged, SingularJacobian
from .expr import EvalError
from .greens import BvpParams
from .quadrature import Grid

log = logging.getLogger(__name__)

MAX_HALVINGS = 30
# the residual rows carry a 1/h^2 factor, so rounding alone leaves a floor
# of about eps * (|L| |u|); residuals below FLOOR_FACTOR times that count
# as converged
FLOOR_FACTOR = 16.0


def _linear_row(nodes: np.ndarray, x: float) -> np.ndarray:
    n = len(nodes) - 1
    h = 1.0 / n
    j = min(int(x / h), n - 1)
    w = (x - nodes[j]) / h
    row = np.zeros(n + 1)
    row[j] = 1.0 - w
    row[j + 1] = w
    return row


def _cubic_row(nodes: np.ndarray, x: float) -> np.ndarray:
    """Four-point Lagrange weights; the boundary couplings amplify the
    interpolation error at eta by up to alpha / (1 - alpha eta)."""
    n = len(nodes) - 1
    if n < 3:
        return _linear_row(nodes, x)
    j = min(max(int(x * n) - 1, 0), n - 3)
    xs = nodes[j:j + 4]
    row = np.zeros(n + 1)
    for k in range(4):
        others = np.delete(xs, k)
        row[j + k] = np.prod((x - others) / (xs[k] - others))
    return row


def _delay_matrix(params: BvpParams, nodes: np.ndarray) -> np.ndarray:
    """Row i maps node values to u(t_i - tau), history chain included."""
    eta_row = _cubic_row(nodes, params.eta)
    E = np.empty((len(nodes), len(nodes)))
    for i, t in enumerate(nodes):
        if t <= params.tau:
            E[i] = params.beta * eta_row
        else:
            E[i] = _linear_row(nodes, t - params.tau)
    return E


def _call(fn, *args):
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(fn(*args), dtype=float)
    except (EvalError, OverflowError, ZeroDivisionError) as exc:
        raise NonFiniteEvaluation(str(exc)) from exc
    out = np.broadcast_to(out, args[0].shape).astype(float)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation("a or f returned a non-finite value")
    return out


class _System:
    def __init__(self, params: BvpParams, a, f, n: int, dfdu=None):
        self.params = params
        self.f = f
        self.dfdu = dfdu
        self.n = n
        self.h = 1.0 / n
        self.nodes = np.arange(n + 1) / n
        self.E = _delay_matrix(params, self.nodes)
        self.scale = params.lam * _call(a, self.nodes)
        eta_row = _cubic_row(self.nodes, params.eta)
        L = np.zeros((n + 1, n + 1))
        i = np.arange(1, n)
        L[i, i - 1] = L[i, i + 1] = 1.0 / self.h ** 2
        L[i, i] = -2.0 / self.h ** 2
        L[0] = -params.beta * eta_row
        L[0, 0] += 1.0
        L[n] = -params.alpha * eta_row
        L[n, n] += 1.0
        self.L = L

    def rounding_floor(self, u):
        fv = _call(self.f, self.nodes, self.delayed(u))
        size = np.abs(self.L) @ np.abs(u) + np.abs(self.scale * fv)
        return FLOOR_FACTOR * np.finfo(float).eps * float(size.max())

    def delayed(self, u):
        return np.maximum(self.E @ u, 0.0)

    def residual(self, u):
        r = self.L @ u
        r[1:-1] += self.scale[1:-1] * _call(self.f, self.nodes[1:-1], self.delayed(u)[1:-1])
        return r

    def jacobian(self, u):
        v = self.delayed(u)[1:-1]
        t = self.nodes[1:-1]
        if self.dfdu is not None:
            fu = _call(self.dfdu, t, v)
        else:
            step = 1e-6 * (1.0 + np.abs(v))
            lo = np.maximum(v - step, 0.0)
            fu = (_call(self.f, t, v + step) - _call(self.f, t, lo)) / (v + step - lo)
        J = self.L.copy()
        J[1:-1] += (self.scale[1:-1] * fu)[:, None] * self.E[1:-1]
        return J


def fd_residual(params: BvpParams, a, f, u_grid) -> np.ndarray:
    u = np.asarray(u_grid, dtype=float)
    return _System(params, a, f, len(u) - 1).residual(u)


def newton_solve(params: BvpParams, a, f, grid: Grid, tol: float = 1e-8,
                 max_iter: int = 50, initial=None, dfdu=None) -> np.ndarray:
    """Solve the discrete system by damped Newton with dense LU.

    ``initial`` defaults to the zero vector.  ``dfdu`` is an optional
    analytic derivative of f in u; otherwise a central difference is used.
    """
    sys_ = _System(params, a, f, grid.n, dfdu)
    u = np.zeros(grid.n + 1) if initial is None else np.array(initial, dtype=float)
    r = sys_.residual(u)
    rnorm = np.max(np.abs(r))
    for it in range(max_iter):
        if rnorm <= tol or rnorm <= sys_.rounding_floor(u):
            return u
        J = sys_.jacobian(u)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)  # checked below
            lu, piv = lu_factor(J, check_finite=True)
        d = np.abs(np.diag(lu))
        if d.min() <= 1e-14 * d.max():
            raise SingularJacobian(f"Jacobian is singular at Newton step {it}")
        delta = lu_solve((lu, piv), -r)
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = u + step * delta
            r_trial = sys_.residual(trial)
            trial_norm = np.max(np.abs(r_trial))
            if trial_norm < rnorm:
                break
            step /= 2.0
        else:
            raise NotConverged(
                f"line search failed after {MAX_HALVINGS} halvings "
                f"(residual {rnorm:.3e})", solution=u)
        u, r, rnorm = trial, r_trial, trial_norm
        log.debug("newton step %d: residual %.3e, step %g", it, rnorm, step)
    if rnorm <= tol or rnorm <= sys_.rounding_floor(u):
        return u
    raise NotConverged(f"Newton did not converge in {max_iter} steps "
                       f"(residual {rnorm:.3e})", solution=u)
