"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto distinct exit codes (see ``icboost.cli``):
usage/configuration problems exit 2, data problems exit 3, loss-domain
and convexity problems exit 4, I/O problems exit 5.
"""


class IcBoostError(Exception):
    """Base class for all icboost errors."""


class ConfigurationError(IcBoostError):
    """Invalid or missing configuration (unknown loss, missing dispersion, ...)."""


class DataError(IcBoostError):
    """Malformed input data: ragged CSV rows, non-numeric cells, arity mismatch."""


class DomainError(IcBoostError):
    """A response or prediction value outside the loss family's valid domain."""


class ConvexityError(DomainError):
    """A second derivative is not strictly positive where it must be."""


class DegenerateResponseError(DomainError):
    """The response admits no finite loss minimizer (e.g. all-zero binary labels)."""


class ModelFormatError(DataError):
    """A model file that cannot be parsed or has an unsupported version tag."""
