"""Exception types shared across the package."""


class LrseError(Exception):
    """Base class for scheme-specific failures."""


class EmbeddingFormatError(LrseError):
    """An embedding text file violates the expected format."""


class UnindexableDocument(LrseError):
    """No usable embedding can be built for a document or query."""


class ConditioningError(LrseError):
    """A matrix is too ill-conditioned to generate or invert."""


class SerializationError(LrseError):
    """Malformed, truncated, or corrupted container bytes."""
