"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes (see ``singular_harvest.cli``).
"""


class HarvestError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(HarvestError, ValueError):
    """A model parameter is non-finite or outside its admissible set."""


class DomainError(HarvestError, ValueError):
    """A function was evaluated outside its domain."""


class RangeError(HarvestError, ValueError):
    """Argument lies outside the supported numerical working range."""


class RegimeError(HarvestError):
    """The requested solver does not apply in the component's regime."""


class NoAnalyticSolutionError(HarvestError):
    """No closed form exists for the requested dynamics/price combination."""


class NumericError(HarvestError, ArithmeticError):
    """A numerical procedure failed (no bracket, no convergence, ...)."""


class EstimationError(HarvestError):
    """Monte Carlo estimation impossible, e.g. every path was invalid."""


class BoundUnavailableError(HarvestError):
    """The upper bound cannot be formed because the generator is unbounded above."""
