"""Exception types shared across the package."""


class CigdpError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class InvalidArgumentError(CigdpError, ValueError):
    pass


class InfeasiblePositionError(CigdpError):
    """An insertion slot would break relative order or the dislocation bound."""


class InvalidStateError(CigdpError):
    pass


class InvalidConfigError(CigdpError, ValueError):
    pass


class InvalidInputError(CigdpError, ValueError):
    pass


class GenerationError(CigdpError):
    pass


class TooLargeError(CigdpError):
    pass


class InstanceFormatError(CigdpError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
