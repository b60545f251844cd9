import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from app.services.exceptions import (
    InsufficientUtterancesError,
    InvalidInputError,
    ShapeError,
)

Array = NDArray[np.float64]

MIN_SCALE_W = 1e-6
UNIT_NORM_TOLERANCE = 1e-6


class Reduction(str, enum.Enum):
    """How per-embedding losses are combined."""

    SUM = "sum"
    MEAN = "mean"


@dataclass(frozen=True, slots=True)
class LossScale:
    """Learnable affine map (w, b) applied to cosine similarities."""

    w: float = 10.0
    b: float = -5.0


@dataclass(frozen=True, slots=True)
class EmbeddingBatch:
    """N speakers × M utterances of unit-norm embeddings."""

    embeddings: Array

    def __post_init__(self) -> None:
        embeddings = np.asarray(self.embeddings, dtype=np.float64)
        if embeddings.ndim != 3:  # noqa: PLR2004
            msg = f"Embedding batch must be (N, M, D), got {embeddings.shape}."
            raise ShapeError(msg)
        n_speakers, m_utterances, _ = embeddings.shape
        if n_speakers < 2:  # noqa: PLR2004
            msg = f"A batch needs at least two speakers, got {n_speakers}."
            raise ShapeError(msg)
        if m_utterances < 2:  # noqa: PLR2004
            msg = f"A batch needs at least two utterances per speaker, got {m_utterances}."
            raise InsufficientUtterancesError(msg)
        norms = np.linalg.norm(embeddings, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE):
            msg = "Every embedding of a batch must have unit norm."
            raise InvalidInputError(msg)
        object.__setattr__(self, "embeddings", embeddings)

    @property
    def n_speakers(self) -> int:
        """N."""
        return int(self.embeddings.shape[0])

    @property
    def m_utterances(self) -> int:
        """M."""
        return int(self.embeddings.shape[1])


@dataclass(frozen=True, slots=True)
class SimilarityMatrix:
    """Scaled cosine similarities; row j·M + i holds S_{ji,k} for every speaker k."""

    values: Array
    n_speakers: int
    m_utterances: int

    def row(self, j: int, i: int) -> Array:
        """Similarities of embedding (j, i) to every speaker."""
        return self.values[j * self.m_utterances + i]


@dataclass(frozen=True, slots=True)
class LossGradients:
    """Derivatives of the total loss."""

    embeddings: Array
    w: float
    b: float


@dataclass(frozen=True, slots=True)
class LossResult:
    """Total loss with its gradients and the similarity matrix it came from."""

    loss: float
    gradients: LossGradients
    similarity: SimilarityMatrix
