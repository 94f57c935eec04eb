"""Exception types raised across the package."""


class ChillaxError(Exception):
    """Base class for every error raised by chillax."""


class HierarchyError(ChillaxError, ValueError):
    pass


class EmptyDocument(HierarchyError):
    pass


class MalformedLine(HierarchyError):
    pass


class DuplicateEdge(HierarchyError):
    pass


class CycleDetected(HierarchyError):
    pass


class MultipleRoots(HierarchyError):
    pass


class NoRoot(HierarchyError):
    pass


class UnknownNode(ChillaxError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidParameters(ChillaxError, ValueError):
    pass


class LengthMismatch(ChillaxError, ValueError):
    pass


class DimensionMismatch(ChillaxError, ValueError):
    pass


class KTooLarge(ChillaxError, ValueError):
    pass


class StepOutOfRange(ChillaxError, ValueError):
    pass


class NotLeafLabeled(ChillaxError, ValueError):
    pass


class EmptyDataset(ChillaxError, ValueError):
    pass


class EmptyValidationSet(ChillaxError, ValueError):
    pass


class DuplicateId(ChillaxError, ValueError):
    pass


class FormatError(ChillaxError, ValueError):
    """A data or checkpoint file does not follow its expected layout."""
