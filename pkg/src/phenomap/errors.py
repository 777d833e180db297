"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so raising the right class
matters: bad invocations and bad parameter values are usage errors,
malformed or non-conforming data is a data error, and solver/linear-algebra
breakdowns are numerical errors.
"""


class PhenomapError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PhenomapError):
    """A schema/config file is malformed or references unknown kinds."""


class ParseError(PhenomapError):
    """A data file could not be parsed; message names the offending row."""


class SchemaError(PhenomapError):
    """Data does not conform to the declared or fitted schema."""


class ParameterError(PhenomapError):
    """A parameter value is out of its documented range."""


class NumericalError(PhenomapError):
    """A numerical routine failed beyond recoverable regularization."""
