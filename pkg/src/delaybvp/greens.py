"""Closed-form kernels for the three-point problem

    u''(t) + y(t) = 0,   u(0) = beta*u(eta),   u(1) = alpha*u(eta),

and the constants that bound its Green's function.

The Dirichlet kernel ``g`` and the three-point kernel ``G`` are evaluated
exactly; ``G`` is ``g`` plus a rank-one correction through ``g(eta, s)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParams, DomainError


@dataclass(frozen=True)
class BvpParams:
    """Problem constants.

    ``lam`` is the forcing scale (``lambda`` is a Python keyword).  Range
    checks run on construction; a violated inequality is reported
    verbatim in the exception message.
    """

    alpha: float
    beta: float
    eta: float
    tau: float
    lam: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "eta", "tau", "lam"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if not 0.0 < self.eta < 1.0:
            raise DomainError(f"eta must satisfy 0 < eta < 1, got {self.eta!r}")
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"tau must satisfy 0 < tau < 1, got {self.tau!r}")
        if self.lam < 0.0:
            raise DomainError(f"lambda must be nonnegative, got {self.lam!r}")
        if self.alpha < 0.0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha!r}")
        if self.alpha * self.eta >= 1.0:
            raise DomainError(
                f"alpha ≥ 1/η violates 0 < alpha < 1/eta "
                f"(alpha={self.alpha!r}, 1/eta={1.0 / self.eta!r})"
            )
        if self.beta < 0.0:
            raise DomainError(f"beta must be nonnegative, got {self.beta!r}")
        denom(self)

    @property
    def beta_bound(self) -> float:
        """Upper bound (1 - alpha*eta)/(1 - eta) on beta."""
        return (1.0 - self.alpha * self.eta) / (1.0 - self.eta)

    def replace(self, **changes) -> "BvpParams":
        fields = dict(alpha=self.alpha, beta=self.beta, eta=self.eta,
                      tau=self.tau, lam=self.lam)
        fields.update(changes)
        return BvpParams(**fields)


@dataclass(frozen=True)
class ConeConstants:
    theta: float
    k1: float
    k2: float
    gamma: float


def denom(params) -> float:
    """Return (1 - alpha*eta) - beta*(1 - eta).

    Accepts any object with ``alpha``, ``beta`` and ``eta`` attributes.
    """
    d = (1.0 - params.alpha * params.eta) - params.beta * (1.0 - params.eta)
    if not d > 0.0:
        raise DegenerateParams(
            f"beta ≥ (1−αη)/(1−η): beta={params.beta!r} but the bound is "
            f"{(1.0 - params.alpha * params.eta) / (1.0 - params.eta)!r} "
            f"(denominator {d!r} ≤ 0)"
        )
    return d


def _check_unit(name, x):
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


def _scalar_or_array(out, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def g_kernel(t, s):
    """Dirichlet Green's function: s(1-t) for s <= t, t(1-s) otherwise.

    Works elementwise on arrays (broadcasting) and returns a float for
    scalar input.
    """
    tt = _check_unit("t", t)
    ss = _check_unit("s", s)
    out = np.where(ss <= tt, ss * (1.0 - tt), tt * (1.0 - ss))
    return _scalar_or_array(out, t, s)


def boundary_coefficient(params: BvpParams, t):
    """(beta + (alpha - beta) t) / denom, the weight of g(eta, s) in G(t, s)."""
    return (params.beta + (params.alpha - params.beta) * np.asarray(t, dtype=float)) / denom(params)


def green(params: BvpParams, t, s):
    """Three-point Green's function G(t, s) = g(t, s) + c(t) g(eta, s)."""
    d = denom(params)
    tt = _check_unit("t", t)
    ss = _check_unit("s", s)
    coeff = (params.beta + (params.alpha - params.beta) * tt) / d
    out = g_kernel(tt, ss) + coeff * g_kernel(params.eta, ss)
    return _scalar_or_array(out, t, s)


def upper_constant(params: BvpParams) -> float:
    """k1 = 1 + max(alpha, beta)/denom, so that G(t, s) <= k1 g(s, s)."""
    return 1.0 + max(params.alpha, params.beta) / denom(params)


def cone_constants(params: BvpParams, theta: float) -> ConeConstants:
    """Upper/lower kernel bounds k1, k2 and the cone constant gamma = k2/k1.

    ``theta`` must lie in the open interval (0, 1/2).
    """
    if not 0.0 < theta < 0.5:
        raise DomainError(f"theta must satisfy 0 < theta < 1/2, got {theta!r}")
    d = denom(params)
    a, b = params.alpha, params.beta
    k1 = upper_constant(params)
    k2 = theta * (1.0 + (b + min((a - b) * theta, (a - b) * (1.0 - theta))) / d)
    if not 0.0 < k2 <= k1:
        raise AssertionError(f"expected 0 < k2 <= k1, got k1={k1!r}, k2={k2!r}")
    return ConeConstants(theta=theta, k1=k1, k2=k2, gamma=k2 / k1)
