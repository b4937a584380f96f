"""Exception types shared across the package."""


class AffineDynkinError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(AffineDynkinError):
    """Operands live on state spaces of different dimension."""


class PolynomialParseError(AffineDynkinError):
    """A polynomial string does not conform to the input grammar."""


class ConfigError(AffineDynkinError):
    """A model configuration document is malformed or violates the schema."""


class InadmissibleModel(AffineDynkinError):
    """Model characteristics violate the structural admissibility conditions."""


class DegreeOverflow(AffineDynkinError):
    """Requested degree exceeds what the model's jump moment tables support."""


class HashMismatch(AffineDynkinError):
    """Two precomputed objects originate from different models."""


class UnsupportedOperation(AffineDynkinError):
    """The operation's preconditions exclude this model or configuration."""
