"""Exception hierarchy.

Everything raised on bad input derives from :class:`DataError` so the CLI can
map it to exit status 1; transport failures map to 3.
"""


class SerpscopeError(Exception):
    pass


class DataError(SerpscopeError, ValueError):
    pass


# serp ingest
class EmptyDocument(DataError):
    pass


class ProfileMismatch(DataError):
    """No result blocks matched; the selector profile has probably drifted."""


class SchemaViolation(DataError):
    pass


# features
class EmptyResults(DataError):
    pass


class EmptyTitles(DataError):
    pass


class TooFewVerticals(DataError):
    pass


class DuplicateVertical(DataError):
    pass


# trainer
class SingleClassData(DataError):
    pass


class Diverged(DataError):
    pass


# evaluator
class LengthMismatch(DataError):
    pass


class TooFewInstances(DataError):
    pass


# dataset io
class HeaderMismatch(DataError):
    pass


class RangeViolation(DataError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class UnlabeledInstance(DataError):
    pass


# fetch
class OfflineMiss(DataError):
    pass


class TransportError(SerpscopeError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status
