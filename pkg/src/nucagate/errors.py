"""Exception types raised across the package."""


class NucaError(Exception):
    """Base class for every error raised by nucagate."""


class ConfigError(NucaError, ValueError):
    """A configuration value or combination of values is invalid."""


class TraceParseError(NucaError, ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class TraceOrderError(TraceParseError):
    """Cycle numbers went backwards."""


class InvalidCodewordError(NucaError, ValueError):
    """A codeword is not one-hot or points past the end of the table."""


class ContractViolation(NucaError, RuntimeError):
    """A caller broke an operation's precondition."""
