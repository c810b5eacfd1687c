"""Exception types raised across the package.

Everything derives from SaddlekitError so callers can catch broadly; campaign
drivers catch per-run failures and record them as rows instead of aborting.
"""


class SaddlekitError(Exception):
    """Base class for all package errors."""


class InvalidInput(SaddlekitError):
    """Argument fails a structural precondition (shape, finiteness, range)."""


class RankDeficient(SaddlekitError):
    """Matrix lacks the column rank an operation requires."""


class InfeasiblePoint(SaddlekitError):
    """Point violates its manifold's defining equations beyond tolerance."""


class NotTangent(SaddlekitError):
    """Vector is not in the tangent space it is claimed to lie in."""


class RetractionDomain(SaddlekitError):
    """Retraction left its domain (projection failed, plane lost rank)."""


class MissingCapability(SaddlekitError):
    """Objective or manifold lacks an optional callback an operation needs."""


class MissingFrame(SaddlekitError):
    """A frame representative was required but is unavailable."""


class BaseMismatch(SaddlekitError):
    """Two bundle quantities are anchored at different base points."""


class Degenerate(SaddlekitError):
    """Spectral data violates the strict gap an operation assumes."""


class DegenerateSums(SaddlekitError):
    """Catalog eigenvalue sums collide; values would not identify entries."""


class AmbiguousMatch(SaddlekitError):
    """A terminal point matches more than one catalog entry at tolerance."""


class InsufficientData(SaddlekitError):
    """Too few samples to estimate the requested quantity."""


class ParseError(SaddlekitError):
    """Malformed input file; message carries the offending line number."""


class ClosedShellViolation(SaddlekitError):
    """Electron count is incompatible with a closed-shell description."""


class RegularityViolation(SaddlekitError):
    """Constraint Jacobian is rank-deficient at the evaluation point."""


class Diverged(SaddlekitError):
    """Iteration produced a non-finite residual."""
