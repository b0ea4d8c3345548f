""" A module containing the errors raised by the solver, the mesh and the analysis harness.
"""


class IpdeHjbError(Exception):
    """ Base class of all errors raised by ipdehjb. """
    def __init__(self, message):
        super(IpdeHjbError, self).__init__(message)


class InvalidParameterError(IpdeHjbError, ValueError):
    """ Exception for parameters outside the range allowed by a model or an operation. """
    def __init__(self, message):
        super(InvalidParameterError, self).__init__(message)


class DegenerateAnnulusError(InvalidParameterError):
    """ Exception for truncation annuli with an inner radius not below the outer radius. """
    def __init__(self, message):
        super(DegenerateAnnulusError, self).__init__(message)


class NonConvergentIntegralError(IpdeHjbError):
    """ Exception for annulus integrals whose adaptive refinement exceeds its budget.

        Raised when an integrand does not vanish fast enough at a singular inner
        radius of 0, or when bisection of a shell does not reach the tolerance.
    """
    def __init__(self, message):
        super(NonConvergentIntegralError, self).__init__(message)


class DimensionUnsupportedError(InvalidParameterError):
    """ Exception for jump or state dimensions beyond the supported range. """
    def __init__(self, message):
        super(DimensionUnsupportedError, self).__init__(message)


class SizeMismatchError(IpdeHjbError, ValueError):
    """ Exception for nodal vectors whose length differs from the vertex count. """
    def __init__(self, message):
        super(SizeMismatchError, self).__init__(message)


class BudgetExceededError(IpdeHjbError):
    """ Exception for quadrature rules that would need more nodes than allowed. """
    def __init__(self, message):
        super(BudgetExceededError, self).__init__(message)


class UnsupportedCaseError(IpdeHjbError):
    """ Exception for (form, alpha) combinations without a compensated scheme. """
    def __init__(self, message):
        super(UnsupportedCaseError, self).__init__(message)


class MeshTooSmallError(IpdeHjbError):
    """ Exception for meshes that lose too much transition mass outside the box. """
    def __init__(self, message):
        super(MeshTooSmallError, self).__init__(message)


class MaxIterationsExceededError(IpdeHjbError):
    """ Exception for policy iteration that does not stabilize within max_outer sweeps. """
    def __init__(self, message):
        super(MaxIterationsExceededError, self).__init__(message)


class ManufacturedCaseError(IpdeHjbError):
    """ Exception for manufactured cases whose oracle residual fails the construction gate. """
    def __init__(self, message):
        super(ManufacturedCaseError, self).__init__(message)


class ConfigError(IpdeHjbError, ValueError):
    """ Exception for run configurations that do not parse or validate.

        The offending key is kept in the `key` attribute and leads the message.
    """
    def __init__(self, key, problem):
        self.key = key
        super(ConfigError, self).__init__(f'{key} {problem}')
