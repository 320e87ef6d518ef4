"""Exception hierarchy shared across the pipeline."""


class HarvestError(Exception):
    """Base class for all pipeline errors."""


class MalformedHtmlError(HarvestError):
    """HTML bytes could not be parsed; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class FetchError(HarvestError):
    """Document could not be retrieved. ``retryable`` marks transient failures."""

    def __init__(self, message: str, retryable: bool = False, status: int | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.status = status


class NoTextLayerError(HarvestError):
    """PDF is encrypted or has no extractable text layer."""


class NotATableError(HarvestError):
    """Span cluster is too small to be a table (fewer than 2 rows or columns)."""


class StructuralError(HarvestError):
    """Table structure violates an assumption (unequal repeated blocks, duplicate columns)."""


class AmbiguousHeaderError(HarvestError):
    """A header cell matched variants of two different canonical fields."""

    def __init__(self, cell: str, candidates: list[str]):
        super().__init__(f"header {cell!r} matches multiple fields: {', '.join(candidates)}")
        self.cell = cell
        self.candidates = candidates


class SensitivityParseError(HarvestError):
    """Cell text does not contain a usable sensitivity value."""

    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw!r}")
        self.raw = raw


class RangeOrderError(HarvestError):
    """Sensitivity range given with low bound above high bound."""


class UnitError(HarvestError):
    """Unit missing or impossible to normalize."""


class DatasetError(HarvestError):
    """Master dataset file failed validation; carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line
