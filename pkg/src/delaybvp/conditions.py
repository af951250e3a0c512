"""Sufficient existence conditions for positive solutions.

Two weighted integrals of a(s) g(s, s) enter the conditions:

    M1 = beta * int_0^tau s(1-s) a(s) ds + int_tau^1 s(1-s) a(s) ds
    M2 = int_0^1 s(1-s) a(s) ds

Small-u and large-u growth rates of f are limsups of max_t f(t, u)/u.
They are probed numerically (a heuristic) unless certified values are
supplied.  With those, the checks are

    small-u growth f0 < inf:     lam * f0 * k1 * M1 < 1
    large-u growth finf < inf:   lam * finf * k1 * M1 < 1/2

Both are sufficient conditions only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NegativeData, NonFiniteEvaluation
from .expr import EvalError
from .greens import BvpParams, upper_constant
from .quadrature import Grid, integrate, simpson_rule

UNBOUNDED_RATIO = 1e6
VANISHING_RATIO = 1e-6
F0_PROBES = np.logspace(0.0, -8.0, 33)
FINF_PROBES = np.logspace(0.0, 8.0, 33)
N_RATIO_MARGIN = 1e-3

SUFFICIENCY_NOTE = ("These are sufficient conditions only; a condition that "
                    "fails does not imply that no positive solution exists.")


@dataclass
class GrowthEstimate:
    value: float
    kind: str = "probed"
    probe_points: list = field(default_factory=list)
    # probed value before snapping to 0 or +inf
    raw: Optional[float] = None

    @classmethod
    def user(cls, value: float) -> "GrowthEstimate":
        if not value >= 0:
            raise ValueError(f"growth bound must be nonnegative, got {value!r}")
        return cls(value=float(value), kind="user_supplied")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


@dataclass
class ConditionReport:
    M1: float
    M2: float
    k1: float
    theorem1_applicable: bool
    lambda_max_thm1: Optional[float]
    theorem2_applicable: bool
    lambda_max_thm2: Optional[float]
    B_thm2: Optional[float]
    notes: list = field(default_factory=list)

    @property
    def notes_text(self) -> str:
        return " ".join(self.notes)


def _values(fn, *args):
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(fn(*args), dtype=float)
    except (EvalError, OverflowError, ZeroDivisionError) as exc:
        raise NonFiniteEvaluation(str(exc)) from exc
    out = np.broadcast_to(out, np.broadcast(*args).shape).astype(float)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation("function returned a non-finite value")
    return out


def _nonneg_a(a, s):
    av = _values(a, s)
    if av.min() < 0.0:
        j = int(np.argmin(av))
        raise NegativeData(f"a is negative ({av[j]!r}) at s={s[j]!r}")
    return av


def _simpson_on(lo: float, hi: float, n_intervals: int):
    m = max(2, n_intervals + n_intervals % 2)
    s = np.linspace(lo, hi, m + 1)
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return s, w * ((hi - lo) / (3.0 * m))


def compute_M2(params: BvpParams, a, grid: Grid) -> float:
    s = grid.nodes
    return integrate(simpson_rule(grid), s * (1.0 - s) * _nonneg_a(a, s))


def compute_M1(params: BvpParams, a, grid: Grid) -> float:
    """Piecewise Simpson, split at tau so tau need not be a grid node."""
    _nonneg_a(a, grid.nodes)
    tau = params.tau
    total = 0.0
    for lo, hi, weight in ((0.0, tau, params.beta), (tau, 1.0, 1.0)):
        s, w = _simpson_on(lo, hi, math.ceil(grid.n * (hi - lo)))
        total += weight * float(w @ (s * (1.0 - s) * _nonneg_a(a, s)))
    return total


def _max_ratios(f, t_nodes, probes):
    T, U = np.meshgrid(t_nodes, probes, indexing="ij")
    ratio = _values(f, T, U) / U
    return ratio.max(axis=0)


def _estimate(f, t_grid: Grid, probes) -> GrowthEstimate:
    probes = np.asarray(probes, dtype=float)
    if probes.ndim != 1 or len(probes) < 3 or np.any(probes <= 0):
        raise ValueError("need at least three positive probe points")
    ratios = _max_ratios(f, t_grid.nodes, probes)
    raw = float(ratios[-3:].max())
    value = raw
    if raw > UNBOUNDED_RATIO:
        value = math.inf
    elif raw < VANISHING_RATIO:
        value = 0.0
    return GrowthEstimate(value=value, kind="probed", raw=raw,
                          probe_points=list(zip(probes.tolist(), ratios.tolist())))


def estimate_f0(f, t_grid: Grid, u_probes=F0_PROBES) -> GrowthEstimate:
    """Heuristic limsup of max_t f(t,u)/u as u -> 0 (probes decreasing).

    Uses the largest ratio over the three smallest probes.  Values above
    1e6 are reported as unbounded and values below 1e-6 as zero (the raw
    number is kept in ``raw``).  A finite sample cannot certify a limsup.
    """
    return _estimate(f, t_grid, u_probes)


def estimate_finf(f, t_grid: Grid, u_probes=FINF_PROBES) -> GrowthEstimate:
    """Heuristic limsup of max_t f(t,u)/u as u -> infinity (probes increasing)."""
    return _estimate(f, t_grid, u_probes)


def probe_N(finf: GrowthEstimate) -> Optional[float]:
    """Smallest probe beyond which the ratio stays below finf * (1 + 1e-3).

    An estimate snapped to zero uses its raw probed value.  Returns None
    when no probe qualifies, the estimate is unbounded, or it was user
    supplied without probe data.
    """
    if not finf.finite or not finf.probe_points:
        return None
    base = finf.value if finf.raw is None else finf.raw
    threshold = base * (1.0 + N_RATIO_MARGIN)
    N = None
    for u, ratio in reversed(finf.probe_points):
        if ratio >= threshold:
            break
        N = u
    return N


def max_f(f, t_grid: Grid, upper: float, samples: int = 201) -> float:
    """max of f over [0, 1] x [0, upper] sampled on the t-grid and a
    uniform-plus-geometric u sample."""
    u = np.unique(np.concatenate([
        np.linspace(0.0, upper, samples),
        upper * np.logspace(-8.0, 0.0, 33),
    ]))
    T, U = np.meshgrid(t_grid.nodes, u, indexing="ij")
    return float(_values(f, T, U).max())


def check_theorems(params: BvpParams, M1: float, M2: float,
                   f0: GrowthEstimate, finf: GrowthEstimate,
                   fmax: Optional[float] = None,
                   N: Optional[float] = None) -> ConditionReport:
    """Evaluate both sufficient conditions at params.lam.

    The epsilon margin in each condition is eliminated analytically, so
    each becomes a strict inequality.  ``lambda_max_*`` is None when no
    positive lambda qualifies (unbounded growth).
    """
    lam = params.lam
    k1 = upper_constant(params)
    notes = [SUFFICIENCY_NOTE]
    for label, est in (("f0", f0), ("finf", finf)):
        if est.kind == "probed":
            notes.append(f"{label} is a probed estimate (heuristic), not a certified bound.")

    def threshold(growth: GrowthEstimate, bound: float):
        if not growth.finite:
            return False, None
        product = growth.value * k1 * M1
        lam_max = math.inf if product == 0.0 else bound / product
        return lam * product < bound, lam_max

    thm1, lam1 = threshold(f0, 1.0)
    thm2, lam2 = threshold(finf, 0.5)
    if not f0.finite:
        notes.append("Small-u growth condition not applicable: f0 is unbounded.")
    if not finf.finite:
        notes.append("Large-u growth condition not applicable: finf is unbounded.")

    B = None
    if N is not None and fmax is not None:
        B = N + 1.0 + 2.0 * lam * k1 * M2 * fmax
    else:
        notes.append("Ball radius B not computed: N or max f on [0, N] unavailable.")
    if M2 == 0.0:
        notes.append("a vanishes identically on the grid; the positivity hypothesis on a fails.")
    return ConditionReport(M1=M1, M2=M2, k1=k1,
                           theorem1_applicable=thm1, lambda_max_thm1=lam1,
                           theorem2_applicable=thm2, lambda_max_thm2=lam2,
                           B_thm2=B, notes=notes)
