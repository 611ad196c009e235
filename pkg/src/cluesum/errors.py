"""Exception types shared across the toolkit."""


class CluesumError(Exception):
    """Base class for input errors (CLI exit code 2)."""


class EmptyInput(CluesumError, ValueError):
    pass


class ParseError(CluesumError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(CluesumError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(Exception):
    """Raised when training hits non-finite values (CLI exit code 3)."""

    def __init__(self, message, tensor_name=None):
        self.tensor_name = tensor_name
        super().__init__(message)
