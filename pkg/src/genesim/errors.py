"""Exception types shared across the package.

ParseError covers malformed input text (CSV files, serialized trees,
config files). ConfigError covers well-formed configuration whose values
violate documented constraints. ValidationError covers arguments or data
structures that break a precondition at call time.
"""


class GenesimError(Exception):
    """Base class for every error this package raises deliberately."""


class ParseError(GenesimError):
    pass


class ConfigError(GenesimError):
    pass


class ValidationError(GenesimError):
    pass
