"""Exception types shared across the pipeline stages."""


class AriseError(Exception):
    """Base class for all errors raised by arise_forge."""


class ParseError(AriseError, ValueError):
    """Malformed disassembly or trace input."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ConfigError(AriseError, ValueError):
    """Invalid run configuration (bad opcode width, missing trace, ...)."""


class ContractViolation(AriseError, RuntimeError):
    """A caller broke an operation's precondition."""


class InvariantError(AriseError, RuntimeError):
    """An internal cross-check failed, e.g. selector and oracle disagree."""
