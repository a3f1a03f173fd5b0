"""
Exception hierarchy for the viscous-limit lab.

Every error carries the exit code the command line reports for it:
1 usage, 2 numerical failure, 3 region or precondition violation.
"""


class VisclimitError(Exception):
    """Base class for all lab errors"""
    exit_code = 2


class UsageError(VisclimitError, ValueError):
    """Malformed flag or config value"""
    exit_code = 1


# Region / precondition failures (exit 3)

class ParameterDomainError(VisclimitError, ValueError):
    """Input outside the domain of a formula (x outside [-1,1], negative radicand, zero vector)"""
    exit_code = 3


class RegionError(VisclimitError, ValueError):
    """Coefficients outside the admissible region J_nu (or J_0 where required)"""
    exit_code = 3


class DegenerateEndpointError(VisclimitError, ValueError):
    """Endpoint value too small for the L'Hopital slope"""
    exit_code = 3


class SingularityError(VisclimitError, ValueError):
    """Field formula divides by sqrt(2P_c) at a root of P_c"""
    exit_code = 3


class PoleError(VisclimitError, ValueError):
    """Angle too close to the symmetry axis"""
    exit_code = 3


class MismatchError(VisclimitError, ValueError):
    """Layer description and solution profile disagree on (nu, c, x_k)"""
    exit_code = 3


# Numerical failures (exit 2)

class NonconvergenceError(VisclimitError, RuntimeError):
    """Integrator failed or the residual is above the acceptance threshold"""
    exit_code = 2


class SignViolationError(VisclimitError, RuntimeError):
    """Interior branch changes sign more than once"""
    exit_code = 2


class BracketError(VisclimitError, RuntimeError):
    """A value or a bisection bracket lies outside the admissible envelope"""
    exit_code = 2


class EmptyWindowError(VisclimitError, RuntimeError):
    """Evaluation window contains no grid points"""
    exit_code = 2


class FitError(VisclimitError, RuntimeError):
    """Log-log regression cannot be formed"""
    exit_code = 2
