"""Exception hierarchy shared by all qftbench modules."""


class QFTBenchError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QFTBenchError, ValueError):
    """Input fails a documented precondition."""


class CapacityError(QFTBenchError):
    """Requested Hilbert space exceeds the dense-simulation limit."""


class DegeneracyError(QFTBenchError):
    """A unique ground state was required but the ground space is degenerate."""


class ChannelError(ValidationError):
    """A Kraus set or quantum map fails trace preservation."""


class EmbeddingError(QFTBenchError):
    """Random chain embedding could not be completed."""


class IngestError(ValidationError):
    """Malformed shot archive. Carries the offending source and line when known."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
