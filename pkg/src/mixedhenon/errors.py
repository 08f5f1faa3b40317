"""Exception types raised across the package."""


class HenonError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(HenonError, ValueError):
    pass


class ConfigurationError(HenonError, ValueError):
    pass


class DomainError(HenonError, ValueError):
    pass


class WeightSingularityError(HenonError, ValueError):
    """Radial weight r^(N-1+w) is not integrable at the origin."""


class SingularityError(HenonError, ValueError):
    """Kernel evaluated on the diagonal r == rho."""


class NotApplicableError(HenonError, ValueError):
    pass


class StaleKernelError(HenonError, ValueError):
    """Kernel was assembled for a different grid or different (N, s, p)."""


class SupercriticalDimensionError(HenonError, ValueError):
    """Critical exponent denominator N - sp (or N - p) is not positive."""


class ExponentDerivationError(HenonError, ValueError):
    pass


class DegenerateDirectionError(HenonError, ValueError):
    """Source integral B(f) vanishes, so the Nehari fibre has no root."""


class NoCandidateError(HenonError, RuntimeError):
    pass


class PreconditionError(HenonError, ValueError):
    pass


class UndefinedRatioError(HenonError, ValueError):
    pass
