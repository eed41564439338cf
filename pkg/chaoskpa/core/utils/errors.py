class KpaError(Exception):
    """Raised when the workbench encounters an error. Carries the process exit code."""

    exit_code = 1

    def __init__(self, message):
        super().__init__(message)
        self.message = message


class ParameterError(KpaError):
    """Chaotic map parameters, network widths or config values out of range."""


class UsageError(KpaError):
    """An operation was called with inputs that violate its contract."""


class ShapeError(KpaError):
    pass


class StateError(KpaError):
    pass


class FormatError(KpaError):
    """A file on disk does not match the format it claims to be."""

    exit_code = 2

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataMissingError(KpaError):
    exit_code = 2

    def __init__(self, message, expected_paths=()):
        if expected_paths:
            listing = "\n".join(f"- `{path}`" for path in expected_paths)
            message = f"{message}\n\nExpected:\n{listing}"
        super().__init__(message)
        self.expected_paths = list(expected_paths)


class UndefinedCorrelationError(KpaError):
    """Pearson correlation is undefined because one image is constant."""

    exit_code = 3


class NumericalError(KpaError):
    exit_code = 3

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record
