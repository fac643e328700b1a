class DataError(ValueError):
    """Input data (boundary files, binary artifacts, covers) is unusable."""


class FormatError(DataError):
    """A binary artifact has the wrong magic, version, or is truncated."""
