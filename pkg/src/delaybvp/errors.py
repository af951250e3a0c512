"""Exception hierarchy shared by all modules."""


class BvpError(Exception):
    """Base class for every error raised by delaybvp."""


class DomainError(BvpError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DegenerateParams(BvpError, ValueError):
    """Boundary parameters make (1 - alpha*eta) - beta*(1 - eta) non-positive."""


class InvalidGrid(BvpError, ValueError):
    pass


class LengthMismatch(BvpError, ValueError):
    pass


class NegativeData(BvpError, ValueError):
    """a(t) or f(t, u) took a negative value where nonnegativity is assumed."""


class NonFiniteEvaluation(BvpError, ArithmeticError):
    pass


class SingularJacobian(BvpError, ArithmeticError):
    pass


class NotConverged(BvpError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    The last iterate and the diagnostics are attached so callers can
    inspect them or hand them to a fallback solver.
    """

    def __init__(self, message, solution=None, diagnostics=None):
        super().__init__(message)
        self.solution = solution
        self.diagnostics = diagnostics
