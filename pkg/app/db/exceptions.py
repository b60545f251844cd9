class BaseExceptionError(Exception):
    """Base class for exceptions in this module."""

    def __init__(self, message: str = "An error occurred.") -> None:
        self.message = message
        super().__init__(message)

    def __str__(self) -> str:
        return repr(self.message)


class ElementNotFoundError(BaseExceptionError):
    """Raised when an element is not found in the store."""


class FormatError(BaseExceptionError):
    """Raised when a binary file has a bad magic, an unknown version or is truncated."""


class ManifestError(BaseExceptionError):
    """Raised when a manifest cannot be accepted."""


class EmptyManifestError(ManifestError):
    """Raised when a manifest holds no entry."""


class DuplicateEntryError(ManifestError):
    """Raised when a (speaker_id, utterance_id) pair appears twice."""


class MissingFileError(ManifestError):
    """Raised when a manifest entry points to a file that does not exist."""


class OpenSetViolationError(ManifestError):
    """Raised when a training speaker also appears in a dev or test split."""


class NotLoadedError(BaseExceptionError):
    """Raised when the d-vector store or checkpoint a request needs is not loaded."""
