"""
Exception hierarchy for the netbench package.
"""


class NetbenchError(Exception):
    """Base class for all netbench errors."""


class DimensionMismatchError(NetbenchError, ValueError):
    """Operands act on spaces of different dimension."""


class InvalidParameterError(NetbenchError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class InvariantViolationError(NetbenchError):
    """An explicit validate() call found a broken invariant."""


class GroupLookupError(NetbenchError, KeyError):
    """A unitary is not (up to phase) an element of the gate group."""


class TopologyError(NetbenchError):
    """Missing node, missing link, or broken path."""


class InsufficientDataError(NetbenchError, ValueError):
    """Not enough distinct lengths or sequences for an estimate."""


class NoSignalError(NetbenchError):
    """Decay data carries no positive signal to fit."""


class ConfigError(NetbenchError):
    """Malformed experiment configuration."""


class TaskFailedError(NetbenchError):
    """A sequence task kept failing after all reassignment attempts."""
