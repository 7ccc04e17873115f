"""Exception hierarchy shared by all modules."""


class DegenlabError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidFunction(DegenlabError, ValueError):
    pass


class InvalidSpec(DegenlabError, ValueError):
    pass


class CoverageError(DegenlabError):
    pass


class SupportError(DegenlabError):
    pass


class DegenerateRoots(DegenlabError, ValueError):
    pass


class ForbiddenExponent(DegenlabError, ValueError):
    pass


class DomainError(DegenlabError, ValueError):
    pass


class QuadratureError(DegenlabError):
    pass


class InvalidGrid(DegenlabError, ValueError):
    pass


class SingularOperator(DegenlabError):
    def __init__(self, msg, theta=None, lam=None):
        super().__init__(msg)
        self.theta = theta
        self.lam = lam


class TruncationError(DegenlabError):
    pass


class NoCriticalRadius(DegenlabError):
    pass


class CoverageShortfall(DegenlabError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class HypothesisViolated(DegenlabError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class ConfigError(DegenlabError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = list(diagnostics or [])


class NonConvergence(UserWarning):
    """Errors failed to decrease monotonically across refinement levels."""
