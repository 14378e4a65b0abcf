"""Exception types shared across the package.

All errors raised by this package derive from :class:`SnoopyError` so callers
can catch one base class at API boundaries (CLI, HTTP service).
"""


class SnoopyError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# File formats and ingestion
# ---------------------------------------------------------------------------

class DataFormatError(SnoopyError):
    """A file does not conform to its declared on-disk format."""


class BadMagic(DataFormatError):
    pass


class VersionUnsupported(DataFormatError):
    pass


class TruncatedFile(DataFormatError):
    pass


class NonFiniteValue(DataFormatError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite value at flat index {index}")


class LabelOutOfRange(DataFormatError):
    def __init__(self, index: int, label: int, n_classes: int):
        self.index = index
        self.label = label
        super().__init__(f"label {label} at index {index} not in [0, {n_classes})")


class MissingFile(DataFormatError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"referenced file does not exist: {path}")


class ShapeMismatch(DataFormatError):
    def __init__(self, message: str, transformation_id: str | None = None):
        self.transformation_id = transformation_id
        super().__init__(message)


class InvalidTarget(DataFormatError):
    pass


class ManifestInvalid(DataFormatError):
    pass


# ---------------------------------------------------------------------------
# Noise model
# ---------------------------------------------------------------------------

class InvalidRho(SnoopyError):
    pass


class InvalidTransition(SnoopyError):
    pass


class ClassCountMismatch(SnoopyError):
    pass


class DomainError(SnoopyError):
    """An argument lies outside the mathematical domain of a formula."""


# ---------------------------------------------------------------------------
# kNN engine
# ---------------------------------------------------------------------------

class DimensionMismatch(SnoopyError):
    pass


class ArmFinished(SnoopyError):
    pass


class IndexOutOfRange(SnoopyError):
    def __init__(self, index: int, n_total: int):
        self.index = index
        super().__init__(f"sample index {index} not in [0, {n_total})")


# ---------------------------------------------------------------------------
# Estimator
# ---------------------------------------------------------------------------

class InvalidClassCount(SnoopyError):
    pass


class OutOfRange(SnoopyError):
    pass


class EmptyInput(SnoopyError):
    pass


class InsufficientPoints(SnoopyError):
    pass


class ZeroErrorPoint(SnoopyError):
    """Too few non-zero loss points remain for a log-space fit."""


class DegenerateFit(SnoopyError):
    pass


# ---------------------------------------------------------------------------
# Scheduler
# ---------------------------------------------------------------------------

class InsufficientBudget(SnoopyError):
    pass


# ---------------------------------------------------------------------------
# Session service
# ---------------------------------------------------------------------------

class SessionNotFound(SnoopyError):
    pass


class AlreadyRunning(SnoopyError):
    pass


class NoPriorRun(SnoopyError):
    pass


class DegenerateModel(SnoopyError):
    pass


class StorageFailure(SnoopyError):
    pass
