"""Exception hierarchy shared by the library, CLI, and service.

Every error class carries a process exit code so the CLI can map failures
to documented, distinct codes (see README).
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all latentsim errors."""

    exit_code = 1


class IngestionError(EngineError):
    """Non-finite or malformed numeric input reached a math primitive."""

    exit_code = 10


class NumericError(EngineError):
    """A numerical routine failed to converge."""

    exit_code = 11


class ConfigError(EngineError):
    """A parameter is outside its documented domain."""

    exit_code = 12


class ShapeError(EngineError):
    """Operands have incompatible dimensions."""

    exit_code = 13


class BoundsError(EngineError):
    """A pixel region falls outside its grid."""

    exit_code = 14


class EmptyRegionError(EngineError):
    """A pixel region selects no pixels."""

    exit_code = 15


class BundleFormatError(EngineError):
    """A feature bundle violates the on-disk format contract."""

    exit_code = 16


class ManifestError(BundleFormatError):
    """The bundle manifest cannot be parsed."""

    exit_code = 17


class EmptyBundleError(BundleFormatError):
    """The bundle declares no objects."""

    exit_code = 18


class QueryError(EngineError):
    """A query references an unknown object."""

    exit_code = 19


class NotFoundError(EngineError):
    """An object or cluster id does not exist."""

    exit_code = 20


class InsufficientClustersError(EngineError):
    """Cluster-difference weighting needs at least two clusters."""

    exit_code = 21


class DegenerateWeightsError(EngineError):
    """All cluster mean differences are zero; weights cannot be normalized."""

    exit_code = 22


class VersionError(EngineError):
    """A session file was written by an unsupported format version."""

    exit_code = 23


class IntegrityError(EngineError):
    """Stored bytes do not match their recorded checksum."""

    exit_code = 24


class ContractViolationError(EngineError):
    """An internal precondition was broken (e.g. negative post-ReLU values)."""

    exit_code = 25


class TrainingError(EngineError):
    """Training diverged; carries the history recorded up to the failure."""

    exit_code = 26

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
