"""Exception hierarchy shared by the library and the command line."""


class BoundError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BoundError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class PreconditionError(BoundError, ValueError):
    """Arguments are in-domain but violate a theorem's hypotheses."""


class SpecError(BoundError, ValueError):
    """A scan specification is internally inconsistent."""


class CoverageGapError(BoundError):
    """A scan report does not cover the range a certificate needs."""


class CheckpointCorruptError(BoundError):
    """A checkpoint record failed its digest check or could not be parsed."""
