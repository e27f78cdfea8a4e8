"""Exception types shared across the package."""


class MpfecError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleScheduleError(MpfecError):
    """No schedule satisfying the delay/generation constraints exists."""


class EnumerationLimitError(MpfecError):
    """The brute-force enumeration guard was exceeded; use the
    even-spacing fast path instead."""


class TraceFormatError(MpfecError):
    """A trace file is malformed."""

    def __init__(self, message, filename=None, line=None):
        where = ""
        if filename is not None:
            where = f"{filename}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.filename = filename
        self.line = line


class TraceResolutionError(MpfecError):
    """The schedule cannot be resolved on the trace sampling grid
    (two packets of one block map to the same sample on one path)."""


class ConfigError(MpfecError):
    """A scenario config file is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
