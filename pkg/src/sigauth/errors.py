"""Exception hierarchy for the signature-authentication pipeline.

Every error raised on purpose by this package derives from :class:`SigAuthError`,
so callers can catch one type at a pipeline boundary (the CLI does exactly that).
"""


class SigAuthError(Exception):
    """Base class for all errors raised by this package."""


# --- sample / dataset shape errors ---------------------------------------

class TooFewRows(SigAuthError):
    """A signature sample has fewer than 2 rows."""


class NonMonotonicTime(SigAuthError):
    """Sample timestamps are not strictly increasing."""


class EmptyMask(SigAuthError):
    """A feature mask includes no channel at all."""


class EmptyDataset(SigAuthError):
    """An operation that needs at least one sample got none."""


# --- corpus file I/O -------------------------------------------------------

class IoFailure(SigAuthError):
    """The underlying file could not be read or written."""


class ParseFailure(SigAuthError):
    """A corpus line is not valid JSON; message carries the line number."""


class SchemaViolation(SigAuthError):
    """A corpus line parsed but does not match the expected record schema."""


# --- preprocessing ---------------------------------------------------------

class InsufficientSamples(SigAuthError):
    """Covariance needs at least two samples."""


class NonFiniteInput(SigAuthError):
    """NaN or infinity found where finite values are required."""


class ZeroVarianceFeature(SigAuthError):
    """A feature column has no variance, so correlation is undefined."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"feature column {index} has zero (or negative) variance")


class DecompositionFailure(SigAuthError):
    """The SVD of the correlation matrix did not converge."""


class DimensionMismatch(SigAuthError):
    """Vector or matrix dimensions do not agree with the model or mask."""


# --- network training --------------------------------------------------------

class BadShape(SigAuthError):
    """Layer size list is not a valid [input, hidden..., 2] architecture."""


class Diverged(SigAuthError):
    """Training produced a non-finite error, or damping exceeded its ceiling."""


class SolveFailure(SigAuthError):
    """The damped linear solve produced a non-finite or untrustworthy result."""


class SingleClassDataset(SigAuthError):
    """Training data holds only genuine or only forged samples."""


class PartitionTooSmall(SigAuthError):
    """A training partition lost one of the two label classes."""


class EmptyEnsemble(SigAuthError):
    """A global model has no local networks to combine."""


# --- evaluation ---------------------------------------------------------------

class EmptyScores(SigAuthError):
    """A metric was asked for on an empty score set."""


class NoNegatives(SigAuthError):
    """FAR is undefined without forged samples."""


class NoPositives(SigAuthError):
    """FRR is undefined without genuine samples."""


class SingleClassScores(SigAuthError):
    """A ROC curve needs scores from both classes."""


class NonPositiveTime(SigAuthError):
    """Speedup inputs must be positive wall-clock durations."""


# --- cost model ----------------------------------------------------------------

class NegativeDuration(SigAuthError):
    """Completion time precedes submission time."""


class NegativeInput(SigAuthError):
    """Cost inputs must be non-negative."""


# --- template store ---------------------------------------------------------------

class InsufficientEnrollment(SigAuthError):
    """Too few genuine or forged samples to enroll a user."""


class UserNotEnrolled(SigAuthError):
    """Verification was requested for a user with no stored template."""


class CorruptStore(SigAuthError):
    """A template file does not match its manifest checksum."""
