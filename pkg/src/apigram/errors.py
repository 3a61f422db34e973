"""Typed error hierarchy.

Every error family carries a distinct CLI exit code so shell pipelines can
tell input problems from parameter problems from a damaged model file.
"""


class ApigramError(Exception):
    """Base class for all typed errors raised by this package."""

    exit_code = 1


class InputError(ApigramError):
    """A source file (report, manifest, predictions) is unusable."""

    exit_code = 3


class MalformedReport(InputError):
    """Report bytes are not parseable as the behavioral report schema."""

    def __init__(self, sample_id: str, reason: str):
        super().__init__(f"sample {sample_id!r}: malformed report: {reason}")
        self.sample_id = sample_id


class EmptyReport(InputError):
    """A report parsed cleanly but contained zero usable calls."""

    def __init__(self, sample_id: str):
        super().__init__(f"sample {sample_id!r}: report contains no usable calls")
        self.sample_id = sample_id


class ManifestError(InputError):
    """Corpus manifest violates its invariants (dup id, missing file, bad split)."""


class MissingTruth(InputError):
    """A classified sample has no ground-truth label."""


class DataError(ApigramError):
    """In-memory data or parameters violate an operation's contract."""

    exit_code = 4


class BadOrder(DataError):
    """Requested n-gram order outside {1, 2, 3}."""


class EmptyDocument(DataError):
    """Operation requires a non-empty token document."""


class EmptyCorpus(DataError):
    """Operation requires at least one document."""


class EmptySelection(DataError):
    """Feature selection removed every token; parameters too aggressive."""


class UnlabeledSample(DataError):
    """A training document has no class label."""


class EmptyClass(DataError):
    """A class ended up with zero usable profile tokens."""


class OrderMismatch(DataError):
    """Documents/profiles of different n-gram orders were mixed."""


class EmptyMatrix(DataError):
    """Metrics requested for a confusion matrix with zero samples."""


class VocabTooLarge(DataError):
    """Selected vocabulary exceeds the image grid capacity."""


class BadTemplate(DataError):
    """Synthesis template violates its invariants."""


class ModelError(ApigramError):
    """A persisted model store cannot be trusted."""

    exit_code = 5


class IntegrityError(ModelError):
    """Model file is truncated, altered, or fails digest verification."""


class VersionError(ModelError):
    """Model file declares a format version this build does not read."""


class IoError(ApigramError):
    """Filesystem read/write failed."""

    exit_code = 6
