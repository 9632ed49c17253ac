"""Exception hierarchy shared across the package."""


class ChaincastError(Exception):
    """Base class for all package-specific errors."""


class InvalidNodeError(ChaincastError, ValueError):
    """A node id or coordinate lies outside the mesh."""


class CapacityError(ChaincastError):
    """A solver was asked for a problem size beyond its configured limit."""


class CodecError(ChaincastError, ValueError):
    """A configuration packet could not be encoded or decoded."""


class FramingError(CodecError):
    """Frame sequence of a configuration packet is inconsistent."""


class ProtocolError(ChaincastError):
    """A chain endpoint observed an event that is illegal in its state."""


class ConfigError(ChaincastError, ValueError):
    """An experiment or simulation configuration is malformed."""
