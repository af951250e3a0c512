"""Green's function and Picard solver for the three-point delay problem

    u''(t) + lam a(t) f(t, u(t - tau)) = 0,   t in [0, 1],
    u(t) = beta u(eta) on [-tau, 0],   u(1) = alpha u(eta).
"""
from .conditions import (ConditionReport, GrowthEstimate, check_theorems,
                         compute_M1, compute_M2, estimate_f0, estimate_finf)
from .errors import (BvpError, DegenerateParams, DomainError, InvalidGrid,
                     LengthMismatch, NegativeData, NonFiniteEvaluation,
                     NotConverged, SingularJacobian)
from .expr import Expression, evaluate, parse
from .fixedpoint import (SolutionFunction, SolveDiagnostics, SolverConfig,
                         apply_T, cone_check, delayed_value, picard_solve,
                         sup_norm_01, sup_norm_full)
from .greens import BvpParams, ConeConstants, cone_constants, denom, g_kernel, green
from .oracle import fd_residual, newton_solve
from .quadrature import Grid, QuadratureRule, green_apply, integrate, make_grid, simpson_rule

__version__ = "0.1.0"
