"""Exception types shared across the toolkit."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's preconditions."""


class FormatError(ValueError):
    """A file or payload does not match its expected schema.

    Carries the line/column of the offending location when known.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ImageDecodeError(FormatError):
    """An image file could not be decoded as 8-bit RGB raster data."""


class FitFailureError(RuntimeError):
    """A model fit diverged or the problem is unsolvable as posed.

    ``last_iterate`` holds the last numerically valid parameter set, if any.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class TooLargeError(ValueError):
    """The instance exceeds the exact solver's size cap."""
