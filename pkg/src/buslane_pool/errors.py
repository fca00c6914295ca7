"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a delay or flow function."""


class ContractError(ValueError):
    """A solver precondition does not hold for the given parameters."""


class InfeasibleError(ValueError):
    """No split keeps both subnetworks within capacity."""


class NumericError(ArithmeticError):
    """A root search failed to bracket or converge."""
