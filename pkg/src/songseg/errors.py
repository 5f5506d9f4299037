"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file does not conform to the expected binary or text layout."""


class InputTooShortError(ValueError):
    """An audio buffer or feature series is too short for the requested analysis."""


class CompatibilityError(RuntimeError):
    """A checkpoint or matrix was produced under an incompatible pipeline configuration."""
