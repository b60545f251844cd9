"""This module contains the exceptions for the service layer.

Two families exist. `InvalidInputError` covers input that is rejected
(the command line exits with 2) and `NumericalError` covers computations
that meet non-finite or degenerate values (exit code 3).
"""


class BaseExceptionError(Exception):
    """Base class for exceptions in this module."""

    def __init__(self, message: str = "An error occurred.") -> None:
        self.message = message
        super().__init__(message)

    def __str__(self) -> str:
        return repr(self.message)


class InvalidInputError(BaseExceptionError):
    """Input rejected by a service."""


class NumericalError(BaseExceptionError):
    """Non-finite values met in inputs, activations or gradients."""


class NoSpeechError(InvalidInputError):
    """No voice interval of usable length survives preprocessing."""


class SilentInputError(NoSpeechError):
    """The waveform is empty or digital silence."""


class TooShortError(InvalidInputError):
    """Too few samples or frames for the requested operation."""


class SampleRateMismatchError(InvalidInputError):
    """Audio is not at the configured sample rate."""


class ShapeError(InvalidInputError):
    """Arrays do not have the shapes the operation expects."""


class InsufficientUtterancesError(InvalidInputError):
    """Not enough utterances per speaker (M below its minimum)."""


class CorpusTooSmallError(InvalidInputError):
    """The corpus cannot fill one batch."""


class NoTrialsError(InvalidInputError):
    """Genuine or impostor trial list is empty."""


class PartitionEmptyError(InvalidInputError):
    """A duration partition holds no verification utterance."""


class DegenerateEmbeddingError(NumericalError):
    """The network output has zero norm and cannot be normalised."""


class DegenerateCentroidError(NumericalError):
    """A centroid or embedding with zero norm enters a cosine similarity."""


class DegenerateInputError(NumericalError):
    """A zero vector was given to the cosine score."""
