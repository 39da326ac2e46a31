"""Exception hierarchy shared by every treegraph layer.

Each error carries the process exit code the CLI reports for it.
"""


class TreegraphError(Exception):
    """Base exception for treegraph errors."""

    exit_code = 1


class ConfigError(TreegraphError):
    """Raised for invalid or unknown configuration values."""

    exit_code = 2


class DataError(TreegraphError):
    """Raised when corpus, tree or checkpoint data is unusable."""

    exit_code = 3


class ParseError(DataError):
    """Raised when a bracketed tree or CoNLL-U block is malformed.

    Exactly one of ``offset`` (byte offset into a bracketed string) or
    ``line`` (1-based line number of a CoNLL-U block) is set.
    """

    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        self.reason = message
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        elif line is not None:
            message = f"{message} (at line {line})"
        super().__init__(message)


class CorpusError(DataError):
    """Raised for structurally invalid documents or corpora."""

    pass


class NumericalError(TreegraphError):
    """Raised when a computation produces non-finite values or cannot proceed."""

    exit_code = 4


class ShapeError(NumericalError, ValueError):
    """Raised when operand shapes are incompatible for a primitive."""

    def __init__(self, op: str, *shapes: tuple[int, ...]):
        self.op = op
        self.shapes = shapes
        rendered = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class GradientError(NumericalError):
    """Raised when backward is requested on an empty or mismatched record."""

    pass


class GraphError(NumericalError):
    """Raised for document graphs that violate attention preconditions."""

    pass
