"""Exception hierarchy shared by every module of the package."""


class BmtError(Exception):
    """Base class for all package errors."""


class InvalidArgument(BmtError, ValueError):
    pass


class DimensionMismatch(BmtError, ValueError):
    pass


class RankDeficient(BmtError, ValueError):
    """Raised when a design matrix is numerically collinear."""


class DegenerateRegressor(BmtError, ValueError):
    """Raised when a candidate has no variation left after partialling out."""


class InsufficientColumns(BmtError, ValueError):
    pass


class InsufficientRows(BmtError, ValueError):
    pass


class NonFiniteInput(BmtError, ValueError):
    pass


class IndexOutOfRange(BmtError, IndexError):
    pass


class ParseError(BmtError, ValueError):
    """Malformed input file. ``row`` and ``column`` locate the bad cell."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyAfterFiltering(BmtError, ValueError):
    pass
