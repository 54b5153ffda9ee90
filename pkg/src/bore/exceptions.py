"""Exception hierarchy.

Everything deriving from :class:`InputError` is a problem with what the user
supplied (bad file, bad flag, bad shape) and maps to CLI exit code 2.
"""


class BoreError(Exception):
    """Base class for all package errors."""


class InputError(BoreError, ValueError):
    """Invalid user input or configuration."""


class MissingFileError(InputError, FileNotFoundError):
    pass


class CsvParseError(InputError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class LabelColumnError(InputError):
    pass


class NonFiniteValueError(InputError):
    pass


class ShapeError(InputError):
    pass


class SamplingError(InputError):
    pass


class OsfError(InputError):
    pass


class FitError(BoreError):
    pass
