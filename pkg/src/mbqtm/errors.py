"""Exception hierarchy shared by every module."""


class MbqtmError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MbqtmError):
    """Malformed machine, IR, instance or amplitude text.

    ``line`` is 1-based and ``pos`` is a 0-based column; either may be None.
    """

    def __init__(self, message, line=None, pos=None):
        self.line = line
        self.pos = pos
        where = []
        if line is not None:
            where.append(f"line {line}")
        if pos is not None:
            where.append(f"position {pos}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.message = message


class MachineError(MbqtmError):
    """A machine that is structurally invalid (bad references, bad IR layout)."""


class ConsumedError(MbqtmError):
    """Operation attempted on a superposition that was destroyed by measurement."""


class ModelViolation(MbqtmError):
    """Operation not permitted under the active machine model."""


class PreconditionError(MbqtmError, ValueError):
    """Argument outside the documented domain of an operation."""
